// lpm/objectives.hpp

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

// Training targets.  Every objective is a weighted set of sequences whose
// cross entropy against the model is minimized; they differ only in how the
// set and its weights are chosen.

#ifndef LPM_OBJECTIVES_HPP_
#define LPM_OBJECTIVES_HPP_

#include <algorithm>
#include <span>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/decode.hpp"
#include "lpm/ngram_lm.hpp"
#include "lpm/seq2seq.hpp"

namespace lpm {

enum class TargetSource { kSupervised, kLpm, kKdUniform, kPseudoLabel };

struct WeightedTargets {
  std::vector<WeightedSeq> items;
  TargetSource source = TargetSource::kLpm;

  bool empty() const { return items.empty(); }
};

/// The prior renormalized over the length-filtered beam.  Weights come
/// from raw (not length-normalized) sequence log-probabilities.  An empty
/// survivor set yields empty targets.
template <LanguageModel LM>
WeightedTargets local_prior(const Beam &beam, const LM &lm, int L, const LengthFilter &f) {
  if (beam.k < 1) throw Error("objectives", "beam size must be >= 1");
  const Beam kept = length_filter_apply(beam, L, f);
  WeightedTargets t;
  t.source = TargetSource::kLpm;
  if (kept.hyps.empty()) return t;
  std::vector<double> scores;
  scores.reserve(kept.hyps.size());
  for (const auto &h : kept.hyps) scores.push_back(lm_log_prob(lm, h.tokens));
  const auto w = normalize_log_weights(scores);
  for (size_t i = 0; i < w.size(); ++i) t.items.push_back({kept.hyps[i].tokens, w[i]});
  return t;
}

namespace detail {
inline ModelConfig unsmoothed(ModelConfig c) {
  c.label_smoothing = 0.0;
  return c;
}
}  // namespace detail

/// -sum_i w_i log q(y_i | x); 0 for empty targets.
inline double lpm_loss(const ModelConfig &cfg, const ParamVector &p, const Utterance &x,
                       const WeightedTargets &targets) {
  if (targets.source != TargetSource::kLpm) throw Error("objectives", "lpm_loss needs LPM targets");
  if (targets.empty()) return 0.0;
  return accumulate_gradient(detail::unsmoothed(cfg), p, x, targets.items, nullptr);
}

struct PairedExample {
  const Utterance *x;
  TokenSeq y;
};

/// Mean of -log q(gold | x) over the batch.
inline double supervised_loss(const ModelConfig &cfg, const ParamVector &p,
                              std::span<const Utterance> batch) {
  if (batch.empty()) throw Error("objectives", "empty supervised batch");
  double s = 0.0;
  for (const auto &u : batch) {
    if (!u.gold) throw Error("objectives", "supervised example " + u.id + " has no transcript");
    s -= score_sequence(cfg, p, u, *u.gold);
  }
  return s / static_cast<double>(batch.size());
}

/// Top `k_used` hypotheses by rank, uniform weights; no prior, no filter.
inline WeightedTargets kd_uniform_targets(const Beam &beam, int k_used) {
  if (k_used < 1) throw Error("objectives", "k_used must be >= 1");
  WeightedTargets t;
  t.source = TargetSource::kKdUniform;
  const int n = std::min<int>(k_used, static_cast<int>(beam.hyps.size()));
  for (int i = 0; i < n; ++i) t.items.push_back({beam.hyps[i].tokens, 1.0 / n});
  return t;
}

/// Top hypothesis of a fused beam search by a fixed teacher, weight 1.
template <LanguageModel LM>
WeightedTargets pseudo_label_target(const ModelConfig &cfg, const ParamVector &teacher, const LM &lm,
                                    double lambda, const Utterance &x, int k, int max_steps) {
  if (k < 1) throw Error("objectives", "beam size must be >= 1");
  const Fusion<LM> fusion{&lm, lambda};
  const Beam b = beam_search(cfg, teacher, x, k, max_steps, &fusion);
  WeightedTargets t;
  t.source = TargetSource::kPseudoLabel;
  if (!b.hyps.empty()) t.items.push_back({b.hyps.front().tokens, 1.0});
  return t;
}

}  // namespace lpm

#endif  // LPM_OBJECTIVES_HPP_
