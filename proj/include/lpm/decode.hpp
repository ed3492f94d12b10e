// lpm/decode.hpp

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

#ifndef LPM_DECODE_HPP_
#define LPM_DECODE_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/ngram_lm.hpp"
#include "lpm/seq2seq.hpp"

namespace lpm {

struct Hypothesis {
  TokenSeq tokens;
  double asr_logp = 0.0;
  std::optional<double> lm_logp;
  double score = 0.0;  // ranking score: asr_logp, or the fused score
  bool finished = true;
};

struct Beam {
  std::vector<Hypothesis> hyps;
  int k = 0;
};

/// Keep rule: floor(r_lb * L) <= len <= ceil(r_ub * L).
struct LengthFilter {
  double r_lb = 0.95;
  double r_ub = 1.05;

  void validate() const {
    if (!(r_lb >= 0.0)) throw Error("decode", "r_lb must be >= 0");
    if (!(r_ub >= r_lb)) throw Error("decode", "r_ub must be >= r_lb");
  }
  // The 1e-9 slack keeps products such as 1.05 * 20 = 21.000000000000004
  // from rounding to the next integer.
  int lower(int L) const { return static_cast<int>(std::floor(r_lb * L + 1e-9)); }
  long upper(int L) const {
    const double u = std::ceil(r_ub * L - 1e-9);
    return u > 1e15 ? static_cast<long>(1e15) : static_cast<long>(u);
  }
  bool keeps(int len, int L) const { return len >= lower(L) && len <= upper(L); }
};

/// Shallow fusion: ranking score = asr + weight * lm.
template <LanguageModel LM = NGramLM>
struct Fusion {
  const LM *lm = nullptr;
  double weight = 0.0;
};

inline int default_max_steps(const Utterance &x) { return 2 * static_cast<int>(x.frames.size()); }

/// Repeated argmax (ties to the smaller id) until EOS or `max_steps`
/// tokens.  A truncated result gets EOS appended and finished = false.
inline Hypothesis greedy_decode(const ModelConfig &cfg, const ParamVector &p, const Utterance &x,
                                int max_steps) {
  if (max_steps < 1) throw Error("decode", "max_steps must be >= 1");
  IncrementalDecoder dec(cfg, p, x);
  std::vector<IncrementalDecoder::State> st{dec.initial()};
  MatrixXd logp;
  std::vector<TokenId> content;
  TokenId prev = cfg.bos_input();
  Hypothesis h;
  h.finished = false;
  for (int step = 0; step < max_steps; ++step) {
    dec.step(st, std::span<const TokenId>(&prev, 1), logp);
    int best = 0;
    for (int v = 1; v < cfg.vocab_size; ++v)
      if (logp(v, 0) > logp(best, 0)) best = v;
    h.asr_logp += logp(best, 0);
    if (best == cfg.eos_id) {
      h.finished = true;
      break;
    }
    content.push_back(best);
    prev = best;
  }
  content.push_back(cfg.eos_id);
  h.tokens = TokenSeq(std::move(content), cfg.vocab_size, cfg.eos_id);
  h.score = h.asr_logp;
  return h;
}

namespace detail {

struct Partial {
  std::vector<TokenId> content;
  double asr = 0.0, lm = 0.0, score = 0.0;
  IncrementalDecoder::State state;
};

inline bool ranks_before(double sa, const std::vector<TokenId> &a, double sb,
                         const std::vector<TokenId> &b) {
  if (sa != sb) return sa > sb;
  return a < b;
}

}  // namespace detail

/// Beam search with a retired pool for finished hypotheses.  Each step ranks
/// all expansions; EOS expansions ranked within the top k retire to the pool
/// and the best k non-EOS expansions form the next active beam.  Stops when k
/// hypotheses have finished or after `max_steps` expansions.  Returns up to k
/// finished hypotheses, padded with the best unfinished ones.
template <LanguageModel LM = NGramLM>
Beam beam_search(const ModelConfig &cfg, const ParamVector &p, const Utterance &x, int k,
                 int max_steps, const Fusion<LM> *fusion = nullptr) {
  if (k < 1) throw Error("decode", "beam size must be >= 1");
  if (max_steps < 1) throw Error("decode", "max_steps must be >= 1");
  const bool fused = fusion && fusion->lm;
  const int V = cfg.vocab_size;
  IncrementalDecoder dec(cfg, p, x);
  std::vector<detail::Partial> active(1);
  active[0].state = dec.initial();
  std::vector<Hypothesis> done;

  struct Cand {
    double asr, lm, score;
    int parent;
    TokenId tok;
  };
  std::vector<Cand> cands;
  std::vector<IncrementalDecoder::State> states;
  std::vector<TokenId> prev;
  MatrixXd logp;
  for (int step = 0; step < max_steps && !active.empty(); ++step) {
    states.clear();
    prev.clear();
    for (const auto &a : active) {
      states.push_back(a.state);
      prev.push_back(a.content.empty() ? cfg.bos_input() : a.content.back());
    }
    dec.step(states, prev, logp);
    cands.clear();
    for (int b = 0; b < static_cast<int>(active.size()); ++b) {
      const auto &a = active[b];
      for (TokenId v = 0; v < V; ++v) {
        const double asr = a.asr + logp(v, b);
        const double lm = fused ? a.lm + fusion->lm->log_prob(a.content, v) : 0.0;
        cands.push_back({asr, lm, fused ? asr + fusion->weight * lm : asr, b, v});
      }
    }
    // Same-length sequences: lexicographic order is (parent content, token).
    std::sort(cands.begin(), cands.end(), [&](const Cand &l, const Cand &r) {
      if (l.score != r.score) return l.score > r.score;
      if (l.parent != r.parent) return active[l.parent].content < active[r.parent].content;
      return l.tok < r.tok;
    });
    std::vector<detail::Partial> next;
    for (size_t rank = 0; rank < cands.size(); ++rank) {
      const Cand &c = cands[rank];
      const auto &par = active[c.parent];
      if (c.tok == cfg.eos_id) {
        if (static_cast<int>(rank) < k) {
          Hypothesis h;
          std::vector<TokenId> ids = par.content;
          ids.push_back(cfg.eos_id);
          h.tokens = TokenSeq(std::move(ids), V, cfg.eos_id);
          h.asr_logp = c.asr;
          if (fused) h.lm_logp = c.lm;
          h.score = c.score;
          h.finished = true;
          done.push_back(std::move(h));
        }
      } else if (static_cast<int>(next.size()) < k) {
        detail::Partial np;
        np.content = par.content;
        np.content.push_back(c.tok);
        np.asr = c.asr;
        np.lm = c.lm;
        np.score = c.score;
        np.state = states[c.parent];
        next.push_back(std::move(np));
      }
      if (static_cast<int>(next.size()) >= k && static_cast<int>(rank) + 1 >= k) break;
    }
    active = std::move(next);
    if (static_cast<int>(done.size()) >= k) break;
  }

  auto by_rank = [](const Hypothesis &a, const Hypothesis &b) {
    return detail::ranks_before(a.score, a.tokens.ids(), b.score, b.tokens.ids());
  };
  std::sort(done.begin(), done.end(), by_rank);
  Beam beam;
  beam.k = k;
  for (auto &h : done) {
    if (static_cast<int>(beam.hyps.size()) == k) break;
    beam.hyps.push_back(std::move(h));
  }
  if (static_cast<int>(beam.hyps.size()) < k) {
    std::vector<Hypothesis> pad;
    for (const auto &a : active) {
      Hypothesis h;
      std::vector<TokenId> ids = a.content;
      ids.push_back(cfg.eos_id);
      h.tokens = TokenSeq(std::move(ids), V, cfg.eos_id);
      h.asr_logp = a.asr;
      if (fused) h.lm_logp = a.lm;
      h.score = a.score;
      h.finished = false;
      pad.push_back(std::move(h));
    }
    std::sort(pad.begin(), pad.end(), by_rank);
    for (auto &h : pad) {
      if (static_cast<int>(beam.hyps.size()) == k) break;
      const bool dup = std::any_of(beam.hyps.begin(), beam.hyps.end(),
                                   [&](const Hypothesis &o) { return o.tokens == h.tokens; });
      if (!dup) beam.hyps.push_back(std::move(h));
    }
  }
  return beam;
}

enum class RefLenMode { kOracle, kGreedy, kFused };

inline RefLenMode parse_ref_len_mode(const std::string &s) {
  if (s == "oracle") return RefLenMode::kOracle;
  if (s == "greedy") return RefLenMode::kGreedy;
  if (s == "fused") return RefLenMode::kFused;
  throw Error("decode", "unknown reference-length mode '" + s + "'");
}

inline const char *to_string(RefLenMode m) {
  switch (m) {
    case RefLenMode::kOracle: return "oracle";
    case RefLenMode::kGreedy: return "greedy";
    case RefLenMode::kFused: return "fused";
  }
  return "?";
}

/// Token count (EOS excluded) of the gold, the greedy output, or the top
/// fused beam hypothesis of the initial proposal model.
template <LanguageModel LM = NGramLM>
int estimate_ref_length(const ModelConfig &cfg, const ParamVector &initial_proposal,
                        const Utterance &x, RefLenMode mode, const Fusion<LM> *fusion,
                        int max_steps, int beam_k = 4) {
  switch (mode) {
    case RefLenMode::kOracle:
      if (!x.gold) throw Error("decode", "oracle reference length requested without gold for " + x.id);
      return x.gold->length();
    case RefLenMode::kGreedy:
      return greedy_decode(cfg, initial_proposal, x, max_steps).tokens.length();
    case RefLenMode::kFused: {
      const Beam b = beam_search(cfg, initial_proposal, x, beam_k, max_steps, fusion);
      return b.hyps.empty() ? 0 : b.hyps.front().tokens.length();
    }
  }
  return 0;
}

/// Hypotheses whose content length passes the filter, order preserved.
inline Beam length_filter_apply(const Beam &beam, int L, const LengthFilter &f) {
  if (L < 0) throw Error("decode", "reference length must be >= 0");
  Beam out;
  out.k = beam.k;
  for (const auto &h : beam.hyps)
    if (f.keeps(h.tokens.length(), L)) out.hyps.push_back(h);
  return out;
}

}  // namespace lpm

#endif  // LPM_DECODE_HPP_
