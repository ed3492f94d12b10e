// lpm/ngram_lm.hpp

// Copyright 2026  The lpmlab Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LPM_NGRAM_LM_HPP_
#define LPM_NGRAM_LM_HPP_

#include <cmath>
#include <concepts>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpm/core.hpp"

namespace lpm {

/// Anything that scores the next token given the (unpadded) history.
template <typename LM>
concept LanguageModel = requires(const LM &lm, std::span<const TokenId> hist, TokenId t) {
  { lm.log_prob(hist, t) } -> std::convertible_to<double>;
  { lm.vocab() } -> std::convertible_to<const Vocab &>;
};

struct NGramSmoothing {
  /// Additive constant applied at every order; 0 gives maximum likelihood.
  double add_k = 0.1;
  /// Interpolation weight per order, index 0 = unigram.  Empty selects the
  /// default for the model order.
  std::vector<double> weights;

  static std::vector<double> DefaultWeights(int order) {
    switch (order) {
      case 1: return {1.0};
      case 2: return {0.3, 0.7};
      case 3: return {0.1, 0.2, 0.7};
      case 4: return {0.05, 0.1, 0.15, 0.7};
    }
    throw Error("ngram_lm", "no default weights for order " + std::to_string(order));
  }
};

/// Interpolated add-k n-gram model.  Sentence-start padding uses the id
/// `vocab.size()`, which is never predicted.
class NGramLM {
 public:
  static constexpr int kMaxOrder = 4;

  NGramLM() = default;
  NGramLM(Vocab vocab, int order, NGramSmoothing smoothing)
      : vocab_(std::move(vocab)), order_(order), smoothing_(std::move(smoothing)) {
    if (order_ < 1) throw Error("ngram_lm", "order must be >= 1");
    if (order_ > kMaxOrder) throw Error("ngram_lm", "order above " + std::to_string(kMaxOrder));
    if (smoothing_.weights.empty()) smoothing_.weights = NGramSmoothing::DefaultWeights(order_);
    if (static_cast<int>(smoothing_.weights.size()) != order_)
      throw Error("ngram_lm", "need one interpolation weight per order");
    double s = 0.0;
    for (double w : smoothing_.weights) {
      if (!(w >= 0.0)) throw Error("ngram_lm", "negative interpolation weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error("ngram_lm", "interpolation weights must sum to 1");
    if (!(smoothing_.add_k >= 0.0)) throw Error("ngram_lm", "add_k must be >= 0");
    tables_.resize(order_);
  }

  const Vocab &vocab() const { return vocab_; }
  int order() const { return order_; }
  const NGramSmoothing &smoothing() const { return smoothing_; }
  TokenId bos_id() const { return vocab_.size(); }

  /// Adds `count` observations of `token` after `context` at the n-gram
  /// order `context.size() + 1`.  Context ids may include bos_id().
  void add_count(std::span<const TokenId> context, TokenId token, double count) {
    const int j = static_cast<int>(context.size());
    if (j >= order_) throw Error("ngram_lm", "context longer than order - 1");
    if (token < 0 || token >= vocab_.size()) throw Error("ngram_lm", "token out of range");
    Row &row = tables_[j][pack(context)];
    if (row.counts.empty()) row.counts.assign(vocab_.size(), 0.0);
    row.counts[token] += count;
    row.total += count;
  }

  /// Counts every n-gram event of `y`, EOS included.
  void add_sentence(const TokenSeq &y) {
    std::vector<TokenId> padded(order_ - 1, bos_id());
    padded.insert(padded.end(), y.ids().begin(), y.ids().end());
    for (size_t t = order_ - 1; t < padded.size(); ++t)
      for (int j = 0; j < order_; ++j)
        add_count(std::span<const TokenId>(padded).subspan(t - j, j), padded[t], 1.0);
  }

  /// log p(next | history).  `history` is the unpadded token prefix.
  double log_prob(std::span<const TokenId> history, TokenId next) const {
    return std::log(prob(history, next));
  }

  double prob(std::span<const TokenId> history, TokenId next) const {
    TokenId ctx[kMaxOrder];
    const int V = vocab_.size();
    const double k = smoothing_.add_k;
    double p = 0.0;
    for (int j = 0; j < order_; ++j) {
      const double w = smoothing_.weights[j];
      if (w == 0.0) continue;
      // Last j tokens of the history, BOS-padded on the left.
      for (int i = 0; i < j; ++i) {
        const long pos = static_cast<long>(history.size()) - j + i;
        ctx[i] = pos < 0 ? bos_id() : history[pos];
      }
      const auto &tab = tables_[j];
      auto it = tab.find(pack(std::span<const TokenId>(ctx, j)));
      double c = 0.0, total = 0.0;
      if (it != tab.end()) {
        c = it->second.counts[next];
        total = it->second.total;
      }
      const double denom = total + k * V;
      p += w * (denom > 0.0 ? (c + k) / denom : 1.0 / V);
    }
    return p;
  }

  /// Full conditional distribution (probabilities) for a history.
  std::vector<double> distribution(std::span<const TokenId> history) const {
    std::vector<double> d(vocab_.size());
    for (int v = 0; v < vocab_.size(); ++v) d[v] = prob(history, v);
    return d;
  }

  struct Triple {
    int order;
    std::vector<TokenId> context;
    TokenId token;
    double count;
  };

  /// Non-zero counts sorted by (order, context, token).
  std::vector<Triple> triples() const {
    std::vector<Triple> out;
    for (int j = 0; j < order_; ++j) {
      std::map<std::vector<TokenId>, const Row *> sorted;
      for (const auto &[key, row] : tables_[j]) sorted.emplace(unpack(key, j), &row);
      for (const auto &[ctx, row] : sorted)
        for (int v = 0; v < vocab_.size(); ++v)
          if (row->counts[v] != 0.0) out.push_back({j + 1, ctx, v, row->counts[v]});
    }
    return out;
  }

 private:
  struct Row {
    double total = 0.0;
    std::vector<double> counts;
  };

  static uint64_t pack(std::span<const TokenId> ctx) {
    uint64_t key = 0;
    for (TokenId t : ctx) key = (key << 16) | static_cast<uint64_t>(t + 1);
    return key;
  }
  static std::vector<TokenId> unpack(uint64_t key, int len) {
    std::vector<TokenId> ctx(len);
    for (int i = len - 1; i >= 0; --i, key >>= 16) ctx[i] = static_cast<TokenId>(key & 0xffff) - 1;
    return ctx;
  }

  Vocab vocab_;
  int order_ = 0;
  NGramSmoothing smoothing_;
  std::vector<std::unordered_map<uint64_t, Row>> tables_;
};

/// Fits on the first ceil(fraction * |corpus|) sentences.
inline NGramLM train_lm(std::span<const TokenSeq> corpus, const Vocab &vocab, int order,
                        const NGramSmoothing &smoothing = {}, double fraction = 1.0) {
  if (order < 1) throw Error("ngram_lm", "order must be >= 1");
  if (corpus.empty()) throw Error("ngram_lm", "empty training corpus");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("ngram_lm", "fraction must be in (0, 1]");
  if (fraction * static_cast<double>(corpus.size()) < 1.0)
    throw Error("ngram_lm", "fraction selects no sentences");
  const size_t n = static_cast<size_t>(std::ceil(fraction * static_cast<double>(corpus.size()) - 1e-9));
  NGramLM lm(vocab, order, smoothing);
  for (size_t i = 0; i < n; ++i) lm.add_sentence(corpus[i]);
  return lm;
}

/// Sum of per-token log-probabilities, EOS term included.
template <LanguageModel LM>
double lm_log_prob(const LM &lm, const TokenSeq &y) {
  const auto &ids = y.ids();
  double s = 0.0;
  for (size_t t = 0; t < ids.size(); ++t)
    s += lm.log_prob(std::span<const TokenId>(ids.data(), t), ids[t]);
  return s;
}

/// exp(-total log-prob / total tokens), EOS counted as a token.
template <LanguageModel LM>
double token_perplexity(const LM &lm, std::span<const TokenSeq> corpus) {
  if (corpus.empty()) throw Error("ngram_lm", "perplexity of empty corpus");
  double lp = 0.0;
  long n = 0;
  for (const auto &y : corpus) {
    lp += lm_log_prob(lm, y);
    n += static_cast<long>(y.ids().size());
  }
  return std::exp(-lp / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Serialization: magic line, header fields, then sorted count triples as
// "order<TAB>context ids<TAB>token<TAB>count".

inline constexpr const char *kLmMagic = "LPMLM1";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void save_lm(const NGramLM &lm, std::ostream &os) {
  os << kLmMagic << '\n';
  os << "order " << lm.order() << '\n';
  os << "add_k " << format_double(lm.smoothing().add_k) << '\n';
  os << "weights";
  for (double w : lm.smoothing().weights) os << ' ' << format_double(w);
  os << '\n';
  os << "vocab " << lm.vocab().size() << " eos " << lm.vocab().eos_id() << '\n';
  os << "tokens";
  for (const auto &t : lm.vocab().tokens()) os << ' ' << t;
  os << '\n';
  const auto trip = lm.triples();
  os << "counts " << trip.size() << '\n';
  for (const auto &t : trip)
    os << t.order << '\t' << join_ints(t.context) << '\t' << t.token << '\t'
       << format_double(t.count) << '\n';
}

inline void save_lm(const NGramLM &lm, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error("ngram_lm", "cannot write " + path);
  save_lm(lm, os);
}

inline NGramLM load_lm(std::istream &is) {
  auto expect = [&](const std::string &key) {
    std::string k;
    if (!(is >> k) || k != key) throw Error("ngram_lm", "expected '" + key + "' in LM file");
  };
  std::string magic;
  std::getline(is, magic);
  if (magic != kLmMagic) throw Error("ngram_lm", "bad LM magic '" + magic + "'");
  int order, vsize, eos;
  NGramSmoothing sm;
  expect("order");
  is >> order;
  expect("add_k");
  is >> sm.add_k;
  expect("weights");
  sm.weights.resize(order);
  for (auto &w : sm.weights) is >> w;
  expect("vocab");
  is >> vsize;
  expect("eos");
  is >> eos;
  expect("tokens");
  std::vector<std::string> toks(vsize);
  for (auto &t : toks) is >> t;
  size_t n;
  expect("counts");
  is >> n;
  if (!is) throw Error("ngram_lm", "truncated LM header");
  std::string line;
  std::getline(is, line);
  NGramLM lm(Vocab(std::move(toks), eos), order, sm);
  for (size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw Error("ngram_lm", "truncated LM count table");
    std::vector<std::string> f;
    size_t start = 0;
    for (size_t p; (p = line.find('\t', start)) != std::string::npos; start = p + 1)
      f.push_back(line.substr(start, p - start));
    f.push_back(line.substr(start));
    if (f.size() != 4) throw Error("ngram_lm", "malformed count line: " + line);
    const auto ctx = parse_ints(f[1]);
    if (static_cast<int>(ctx.size()) != std::stoi(f[0]) - 1)
      throw Error("ngram_lm", "context length does not match order: " + line);
    lm.add_count(ctx, std::stoi(f[2]), std::stod(f[3]));
  }
  return lm;
}

inline NGramLM load_lm(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw Error("ngram_lm", "cannot read " + path);
  return load_lm(is);
}

}  // namespace lpm

#endif  // LPM_NGRAM_LM_HPP_
