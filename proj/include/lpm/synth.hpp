// lpm/synth.hpp

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

// Synthetic noisy-channel task: sentences come from a bigram "true" language
// model, observations from a left-to-right duration/emission channel.  Small
// instances admit an exact posterior by enumeration.

#ifndef LPM_SYNTH_HPP_
#define LPM_SYNTH_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/ngram_lm.hpp"

namespace lpm {

/// Bigram generator.  Row `vocab.size()` is the sentence-start state.
class TrueLM {
 public:
  TrueLM() = default;
  /// `probs[prev][next]`, prev in [0, V] (V = start), next in [0, V).
  TrueLM(Vocab vocab, std::vector<std::vector<double>> probs)
      : vocab_(std::move(vocab)), probs_(std::move(probs)) {
    const int V = vocab_.size();
    if (static_cast<int>(probs_.size()) != V + 1) throw Error("synth", "TrueLM needs V+1 rows");
    log_probs_.resize(V + 1);
    for (int r = 0; r <= V; ++r) {
      if (static_cast<int>(probs_[r].size()) != V) throw Error("synth", "TrueLM row width != V");
      double s = 0.0;
      for (double p : probs_[r]) {
        if (!(p >= 0.0)) throw Error("synth", "negative TrueLM probability");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) throw Error("synth", "TrueLM row does not sum to 1");
      if (r != V && probs_[r][vocab_.eos_id()] <= 0.0)
        throw Error("synth", "TrueLM row without EOS mass never terminates");
      log_probs_[r].resize(V);
      for (int c = 0; c < V; ++c) log_probs_[r][c] = std::log(probs_[r][c]);
    }
  }

  const Vocab &vocab() const { return vocab_; }
  int order() const { return 2; }
  TokenId bos_id() const { return vocab_.size(); }
  const std::vector<double> &row(TokenId prev) const { return probs_.at(prev); }

  double log_prob(std::span<const TokenId> history, TokenId next) const {
    const TokenId prev = history.empty() ? bos_id() : history.back();
    return log_probs_[prev][next];
  }

  /// Draws one sentence (EOS-terminated, unbounded length).
  TokenSeq sample(Rng &rng) const {
    std::vector<TokenId> ids;
    TokenId prev = bos_id();
    for (;;) {
      const TokenId t = rng.categorical(probs_[prev]);
      ids.push_back(t);
      if (t == vocab_.eos_id()) break;
      prev = t;
    }
    return TokenSeq(std::move(ids), vocab_.size(), vocab_.eos_id());
  }

 private:
  Vocab vocab_;
  std::vector<std::vector<double>> probs_;
  std::vector<std::vector<double>> log_probs_;
};

/// The same distribution as an NGramLM (order 2, pure bigram weights,
/// probabilities stored as fractional counts).
inline NGramLM to_ngram(const TrueLM &t) {
  NGramSmoothing sm;
  sm.add_k = 0.0;
  sm.weights = {0.0, 1.0};
  NGramLM lm(t.vocab(), 2, sm);
  const int V = t.vocab().size();
  for (TokenId prev = 0; prev <= V; ++prev)
    for (TokenId next = 0; next < V; ++next) {
      const TokenId ctx[1] = {prev};
      if (t.row(prev)[next] > 0.0) lm.add_count(ctx, next, t.row(prev)[next]);
    }
  return lm;
}

/// Left-to-right channel: each token emits d ~ duration(token) frames, each
/// frame drawn independently from emission(token).
class Channel {
 public:
  static constexpr int kMaxDuration = 3;

  Channel() = default;
  /// `duration[v][d-1]` for d = 1..3; `emission[v][m]` for m < obs_alphabet_size.
  Channel(std::vector<std::vector<double>> duration, std::vector<std::vector<double>> emission,
          int obs_alphabet_size)
      : duration_(std::move(duration)), emission_(std::move(emission)), obs_size_(obs_alphabet_size) {
    if (duration_.size() != emission_.size()) throw Error("synth", "channel table size mismatch");
    auto check = [](const std::vector<double> &row, size_t width, const char *what) {
      if (row.size() != width) throw Error("synth", std::string(what) + " row width mismatch");
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw Error("synth", std::string(what) + " has a negative entry");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) throw Error("synth", std::string(what) + " row does not sum to 1");
    };
    log_dur_.resize(duration_.size());
    log_emit_.resize(emission_.size());
    for (size_t v = 0; v < duration_.size(); ++v) {
      check(duration_[v], kMaxDuration, "duration");
      check(emission_[v], obs_size_, "emission");
      for (double p : duration_[v]) log_dur_[v].push_back(std::log(p));
      for (double p : emission_[v]) log_emit_[v].push_back(std::log(p));
    }
  }

  int obs_alphabet_size() const { return obs_size_; }
  int num_tokens() const { return static_cast<int>(duration_.size()); }
  const std::vector<double> &duration(TokenId v) const { return duration_.at(v); }
  const std::vector<double> &emission(TokenId v) const { return emission_.at(v); }
  double log_duration(TokenId v, int d) const { return log_dur_[v][d - 1]; }
  double log_emission(TokenId v, int m) const { return log_emit_[v][m]; }

  std::vector<int> sample(const TokenSeq &y, Rng &rng) const {
    std::vector<int> frames;
    for (TokenId v : y.ids()) {
      const int d = 1 + rng.categorical(duration_[v]);
      for (int i = 0; i < d; ++i) frames.push_back(rng.categorical(emission_[v]));
    }
    return frames;
  }

 private:
  std::vector<std::vector<double>> duration_, emission_;
  std::vector<std::vector<double>> log_dur_, log_emit_;
  int obs_size_ = 0;
};

/// log p(x | y), marginalized over all duration assignments by a forward
/// pass over (tokens consumed, frames consumed).
inline double channel_log_likelihood(std::span<const int> frames, const TokenSeq &y,
                                     const Channel &ch) {
  const auto &ids = y.ids();
  const int n = static_cast<int>(ids.size());
  const int T = static_cast<int>(frames.size());
  if (T < n || T > n * Channel::kMaxDuration) return kNegInf;
  for (int f : frames)
    if (f < 0 || f >= ch.obs_alphabet_size()) throw Error("synth", "frame symbol out of range");
  std::vector<double> prev(T + 1, kNegInf), cur(T + 1, kNegInf);
  prev[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const TokenId v = ids[i];
    std::fill(cur.begin(), cur.end(), kNegInf);
    for (int t = 1; t <= T; ++t) {
      double terms[Channel::kMaxDuration];
      int nt = 0;
      double emit = 0.0;
      for (int d = 1; d <= Channel::kMaxDuration && d <= t; ++d) {
        emit += ch.log_emission(v, frames[t - d]);
        if (prev[t - d] == kNegInf) continue;
        terms[nt++] = prev[t - d] + ch.log_duration(v, d) + emit;
      }
      if (nt) cur[t] = log_sum_exp(std::span<const double>(terms, nt));
    }
    std::swap(prev, cur);
  }
  return prev[T];
}

inline double channel_log_likelihood(const Utterance &x, const TokenSeq &y, const Channel &ch) {
  return channel_log_likelihood(x.frames, y, ch);
}

/// Every sequence with 1..max_len content tokens, in length-then-lexicographic
/// order.  Throws when more than `limit` sequences would be produced.
inline std::vector<TokenSeq> enumerate_sequences(const Vocab &vocab, int max_len,
                                                 double limit = 1e7) {
  const int C = vocab.size() - 1;  // content symbols
  double count = 0.0;
  for (int l = 0; l <= max_len; ++l) count += std::pow(static_cast<double>(vocab.size()), l);
  if (count > limit) throw Error("synth", "enumeration guard exceeded");
  std::vector<TokenId> content_ids;
  for (TokenId t = 0; t < vocab.size(); ++t)
    if (t != vocab.eos_id()) content_ids.push_back(t);
  std::vector<TokenSeq> out;
  for (int len = 1; len <= max_len; ++len) {
    std::vector<int> digit(len, 0);
    for (;;) {
      std::vector<TokenId> c(len);
      for (int i = 0; i < len; ++i) c[i] = content_ids[digit[i]];
      out.push_back(TokenSeq::FromContent(c, vocab));
      int i = len - 1;
      while (i >= 0 && ++digit[i] == C) digit[i--] = 0;
      if (i < 0) break;
    }
  }
  return out;
}

/// Exact p(y | x) over all sequences of 1..max_len tokens under the generator.
inline std::map<TokenSeq, double> exact_posterior(const Utterance &x, const TrueLM &lm,
                                                  const Channel &ch, int max_len) {
  const auto all = enumerate_sequences(lm.vocab(), max_len);
  std::vector<double> joint(all.size());
  for (size_t i = 0; i < all.size(); ++i)
    joint[i] = lm_log_prob(lm, all[i]) + channel_log_likelihood(x, all[i], ch);
  const double z = log_sum_exp(joint);
  if (z == kNegInf) throw Error("synth", "observation has zero probability under every sequence");
  std::map<TokenSeq, double> post;
  for (size_t i = 0; i < all.size(); ++i) {
    const double p = std::exp(joint[i] - z);
    if (p > 0.0) post.emplace(all[i], p);
  }
  return post;
}

// ---------------------------------------------------------------------------
// Task construction and corpus sampling.

/// Knobs of the default synthetic task.
struct TaskShape {
  int n_content = 30;         // content tokens; EOS is added
  int obs_alphabet = 40;
  int max_len = 20;
  int lm_branching = 3;       // preferred successors per state
  double lm_focus = 0.95;     // mass on preferred successors
  double eos_prob = 0.08;     // per-step stop probability after a content token
  int confusion_group = 3;    // tokens sharing observation symbols
  double emit_own = 1.0 / 3.0; // mass on a token's own symbol
  double emit_group = 2.0 / 3.0; // mass spread over the group's other symbols
  bool cross_group = true;    // preferred successors avoid the current token's group
  double duration_peak = 0.9; // if > 0, mass on two frames; the rest split over 1 and 3
  double eos_contrast = 0.9;  // half the tokens stop at eos_prob*(1+c), half at eos_prob*(1-c)
  uint64_t generator_seed = 1;

  std::string describe() const {
    std::ostringstream os;
    os << "n_content=" << n_content << " obs_alphabet=" << obs_alphabet << " max_len=" << max_len
       << " lm_branching=" << lm_branching << " lm_focus=" << format_double(lm_focus)
       << " eos_prob=" << format_double(eos_prob) << " confusion_group=" << confusion_group
       << " emit_own=" << format_double(emit_own) << " emit_group=" << format_double(emit_group)
       << " cross_group=" << (cross_group ? 1 : 0) << " duration_peak=" << format_double(duration_peak)
       << " eos_contrast=" << format_double(eos_contrast)
       << " generator_seed=" << generator_seed;
    return os.str();
  }
};

inline TrueLM make_true_lm(const TaskShape &s) {
  const Vocab vocab = Vocab::Synthetic(s.n_content);
  const int V = vocab.size(), C = s.n_content, eos = vocab.eos_id();
  Rng rng = Rng(s.generator_seed).derive(1);
  std::vector<std::vector<double>> probs(V + 1, std::vector<double>(V, 0.0));
  std::vector<bool> final_ish(V + 1, false);
  if (s.eos_contrast > 0.0) {
    if (s.eos_prob * (1.0 + s.eos_contrast) >= 1.0) throw Error("synth", "eos_prob * (1 + eos_contrast) must be < 1");
    std::vector<int> tokens(C);
    for (int c = 0; c < C; ++c) tokens[c] = c;
    Rng(s.generator_seed).derive(3).shuffle(tokens);
    for (int i = 0; i < C / 2; ++i) final_ish[tokens[i]] = true;
  }
  for (int prev = 0; prev <= V; ++prev) {
    if (prev == eos) {  // never used as a context; keep it a valid row
      for (int c = 0; c < V; ++c) probs[prev][c] = 1.0 / V;
      continue;
    }
    const bool start = prev == V;
    const double stop = start ? 0.0 : s.eos_prob * (final_ish[prev] ? 1.0 + s.eos_contrast : 1.0 - s.eos_contrast);
    const double floor_mass = (1.0 - stop) * (1.0 - s.lm_focus);
    const double focus_mass = (1.0 - stop) * s.lm_focus;
    std::vector<int> order(C);
    for (int c = 0; c < C; ++c) order[c] = c;
    rng.shuffle(order);
    if (s.cross_group) {
      // Preferred successors come from pairwise distinct groups other than
      // the current token's own group.
      const int g = std::max(1, s.confusion_group);
      std::vector<int> picked, rest;
      std::vector<bool> used((C + g - 1) / g, false);
      if (!start) used[prev / g] = true;
      for (int c : order) {
        if (static_cast<int>(picked.size()) < s.lm_branching && !used[c / g]) {
          used[c / g] = true;
          picked.push_back(c);
        } else {
          rest.push_back(c);
        }
      }
      order = picked;
      order.insert(order.end(), rest.begin(), rest.end());
    }
    std::vector<double> raw(s.lm_branching);
    double rs = 0.0;
    for (auto &r : raw) rs += (r = 0.5 + rng.uniform());
    for (int c = 0; c < C; ++c) probs[prev][c] = floor_mass / C;
    for (int b = 0; b < s.lm_branching && b < C; ++b) probs[prev][order[b]] += focus_mass * raw[b] / rs;
    probs[prev][eos] = stop;
    if (start) {  // start row also keeps EOS mass positive; empty sentences are rejected
      const double e = 1e-3;
      for (int c = 0; c < C; ++c) probs[prev][c] *= (1.0 - e);
      probs[prev][eos] = e;
    }
  }
  return TrueLM(vocab, std::move(probs));
}

inline Channel make_channel(const TaskShape &s) {
  const int V = s.n_content + 1, M = s.obs_alphabet;
  if (M < V) throw Error("synth", "observation alphabet smaller than vocabulary");
  Rng rng = Rng(s.generator_seed).derive(2);
  std::vector<std::vector<double>> dur(V), emit(V, std::vector<double>(M, 0.0));
  for (int v = 0; v < V; ++v) {
    double d[3], ds = 0.0;
    for (double &x : d) ds += (x = 0.7 + 0.6 * rng.uniform());
    dur[v] = {d[0] / ds, d[1] / ds, d[2] / ds};
    if (s.duration_peak > 0.0) {
      const double side = (1.0 - s.duration_peak) / 2.0;
      dur[v] = {side, s.duration_peak, side};
    }
  }
  if (s.emit_own + s.emit_group > 1.0 + 1e-12) throw Error("synth", "emit_own + emit_group exceeds 1");
  const double noise = std::max(0.0, 1.0 - s.emit_own - s.emit_group);
  const int g = std::max(1, s.confusion_group);
  for (int v = 0; v < V; ++v) {
    for (int m = 0; m < M; ++m) emit[v][m] = noise / M;
    if (v == s.n_content) {  // EOS: its own symbol, no confusion partners
      emit[v][v] += s.emit_own + s.emit_group;
      continue;
    }
    const int base = (v / g) * g;
    const int end = std::min(base + g, s.n_content);
    const int partners = end - base - 1;
    emit[v][v] += s.emit_own + (partners == 0 ? s.emit_group : 0.0);
    for (int u = base; u < end; ++u)
      if (u != v) emit[v][u] += s.emit_group / partners;
  }
  return Channel(std::move(dur), std::move(emit), M);
}

struct SplitSizes {
  int paired = 500;
  int unpaired_speech = 2000;
  int unpaired_text = 20000;
  int dev = 300;
  int test = 300;
};

struct DatasetBundle {
  Vocab vocab;
  int obs_alphabet_size = 0;
  std::vector<Utterance> paired;
  std::vector<Utterance> unpaired_speech;  // gold withheld
  std::vector<TokenSeq> unpaired_gold;     // sealed, parallel to unpaired_speech
  std::vector<TokenSeq> unpaired_text;
  std::vector<Utterance> dev;
  std::vector<Utterance> test;

  /// Unpaired speech with the sealed transcripts attached (evaluation only).
  std::vector<Utterance> unsealed_unpaired() const {
    std::vector<Utterance> out = unpaired_speech;
    for (size_t i = 0; i < out.size(); ++i) out[i].gold = unpaired_gold[i];
    return out;
  }
};

namespace detail {

inline TokenSeq sample_bounded(const TrueLM &lm, int max_len, Rng &rng) {
  constexpr int kMaxAttempts = 10000;
  int rejected = 0;
  for (int a = 0; a < kMaxAttempts; ++a) {
    TokenSeq y = lm.sample(rng);
    if (y.length() >= 1 && y.length() <= max_len) return y;
    ++rejected;
  }
  throw Error("synth", "rejection rate above 99% (" + std::to_string(rejected) +
                           " rejected); respecify the language model or raise max_len");
}

inline std::string utt_id(const char *split, int i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s-%06d", split, i);
  return buf;
}

}  // namespace detail

/// Samples every split.  Each record uses its own derived stream, so the
/// bundle depends only on the seed, not on generation order.
inline DatasetBundle sample_corpus(const TrueLM &lm, const Channel &ch, const SplitSizes &sizes,
                                   int max_len, const Rng &rng) {
  if (sizes.paired < 1 || sizes.unpaired_speech < 0 || sizes.unpaired_text < 0 || sizes.dev < 0 ||
      sizes.test < 0)
    throw Error("synth", "split sizes must be positive");
  if (max_len < 1) throw Error("synth", "max_len must be >= 1");
  if (ch.num_tokens() != lm.vocab().size()) throw Error("synth", "channel/vocab size mismatch");

  // Global rejection-rate check on a fixed probe stream.
  {
    Rng probe = rng.derive(99);
    int ok = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
      const TokenSeq y = lm.sample(probe);
      if (y.length() >= 1 && y.length() <= max_len) ++ok;
    }
    if (ok * 100 < n)
      throw Error("synth", "rejection rate above 99%; respecify the language model or raise max_len");
  }

  DatasetBundle b;
  b.vocab = lm.vocab();
  b.obs_alphabet_size = ch.obs_alphabet_size();
  auto speech = [&](const char *name, int split, int count, std::vector<Utterance> &out) {
    for (int i = 0; i < count; ++i) {
      Rng r = rng.derive((static_cast<uint64_t>(split) << 32) | static_cast<uint64_t>(i));
      Utterance u;
      u.id = detail::utt_id(name, i);
      TokenSeq y = detail::sample_bounded(lm, max_len, r);
      u.frames = ch.sample(y, r);
      u.gold = std::move(y);
      out.push_back(std::move(u));
    }
  };
  speech("paired", 1, sizes.paired, b.paired);
  speech("unpaired", 2, sizes.unpaired_speech, b.unpaired_speech);
  speech("dev", 4, sizes.dev, b.dev);
  speech("test", 5, sizes.test, b.test);
  std::set<TokenSeq> sealed;
  for (auto &u : b.unpaired_speech) {
    sealed.insert(*u.gold);
    b.unpaired_gold.push_back(*u.gold);
    u.gold.reset();
  }
  for (int i = 0; i < sizes.unpaired_text; ++i) {
    Rng r = rng.derive((3ULL << 32) | static_cast<uint64_t>(i));
    for (int attempt = 0;; ++attempt) {
      TokenSeq y = detail::sample_bounded(lm, max_len, r);
      if (!sealed.count(y)) {
        b.unpaired_text.push_back(std::move(y));
        break;
      }
      if (attempt > 10000) throw Error("synth", "cannot sample text disjoint from unpaired speech");
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Dataset files.  Speech records: "id<TAB>frames<TAB>gold" (gold empty for
// unpaired speech, whose transcripts live in unpaired_speech.gold).  Text
// records: "id<TAB>token ids".

namespace detail {

inline std::vector<std::string> split_tabs(const std::string &line) {
  std::vector<std::string> f;
  size_t start = 0;
  for (size_t p; (p = line.find('\t', start)) != std::string::npos; start = p + 1)
    f.push_back(line.substr(start, p - start));
  f.push_back(line.substr(start));
  return f;
}

inline void write_speech(const std::filesystem::path &p, const std::vector<Utterance> &us) {
  std::ofstream os(p);
  if (!os) throw Error("synth", "cannot write " + p.string());
  for (const auto &u : us)
    os << u.id << '\t' << join_ints(u.frames) << '\t' << (u.gold ? u.gold->str() : "") << '\n';
}

inline std::vector<Utterance> read_speech(const std::filesystem::path &p, const Vocab &v) {
  std::ifstream is(p);
  if (!is) throw Error("synth", "cannot read " + p.string());
  std::vector<Utterance> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 3) throw Error("synth", "malformed record in " + p.string() + ": " + line);
    Utterance u;
    u.id = f[0];
    u.frames = parse_ints(f[1]);
    if (u.frames.empty()) throw Error("synth", "utterance " + u.id + " has no frames");
    if (!f[2].empty()) u.gold = TokenSeq(parse_ints(f[2]), v.size(), v.eos_id());
    out.push_back(std::move(u));
  }
  return out;
}

inline void write_text(const std::filesystem::path &p, const std::vector<std::string> &ids,
                       const std::vector<TokenSeq> &ys) {
  std::ofstream os(p);
  if (!os) throw Error("synth", "cannot write " + p.string());
  for (size_t i = 0; i < ys.size(); ++i) os << ids[i] << '\t' << ys[i].str() << '\n';
}

inline std::vector<std::pair<std::string, TokenSeq>> read_text(const std::filesystem::path &p,
                                                              const Vocab &v) {
  std::ifstream is(p);
  if (!is) throw Error("synth", "cannot read " + p.string());
  std::vector<std::pair<std::string, TokenSeq>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 2) throw Error("synth", "malformed text record: " + line);
    out.emplace_back(f[0], TokenSeq(parse_ints(f[1]), v.size(), v.eos_id()));
  }
  return out;
}

}  // namespace detail

/// Writes the bundle under `dir` plus a manifest of `manifest_lines`.
inline void write_bundle(const std::filesystem::path &dir, const DatasetBundle &b,
                         const std::vector<std::string> &manifest_lines) {
  std::filesystem::create_directories(dir);
  detail::write_speech(dir / "paired.tsv", b.paired);
  detail::write_speech(dir / "unpaired_speech.tsv", b.unpaired_speech);
  std::vector<std::string> ids;
  for (const auto &u : b.unpaired_speech) ids.push_back(u.id);
  detail::write_text(dir / "unpaired_speech.gold", ids, b.unpaired_gold);
  ids.clear();
  for (size_t i = 0; i < b.unpaired_text.size(); ++i) ids.push_back(detail::utt_id("text", i));
  detail::write_text(dir / "unpaired_text.txt", ids, b.unpaired_text);
  detail::write_speech(dir / "dev.tsv", b.dev);
  detail::write_speech(dir / "test.tsv", b.test);
  std::ofstream os(dir / "manifest.txt");
  for (const auto &l : manifest_lines) os << l << '\n';
}

inline DatasetBundle read_bundle(const std::filesystem::path &dir, const Vocab &vocab,
                                 int obs_alphabet_size) {
  DatasetBundle b;
  b.vocab = vocab;
  b.obs_alphabet_size = obs_alphabet_size;
  b.paired = detail::read_speech(dir / "paired.tsv", vocab);
  b.unpaired_speech = detail::read_speech(dir / "unpaired_speech.tsv", vocab);
  auto gold = detail::read_text(dir / "unpaired_speech.gold", vocab);
  if (gold.size() != b.unpaired_speech.size())
    throw Error("synth", "unpaired_speech.gold does not match unpaired_speech.tsv");
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].first != b.unpaired_speech[i].id)
      throw Error("synth", "sealed gold id mismatch at " + gold[i].first);
    b.unpaired_gold.push_back(std::move(gold[i].second));
  }
  for (auto &[id, y] : detail::read_text(dir / "unpaired_text.txt", vocab))
    b.unpaired_text.push_back(std::move(y));
  b.dev = detail::read_speech(dir / "dev.tsv", vocab);
  b.test = detail::read_speech(dir / "test.tsv", vocab);
  for (const auto *split : {&b.paired, &b.unpaired_speech, &b.dev, &b.test})
    for (const auto &u : *split)
      for (int f : u.frames)
        if (f < 0 || f >= obs_alphabet_size)
          throw Error("synth", "frame symbol out of range in " + u.id);
  return b;
}

}  // namespace lpm

#endif  // LPM_SYNTH_HPP_
