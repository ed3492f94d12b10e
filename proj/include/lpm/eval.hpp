// lpm/eval.hpp

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

#ifndef LPM_EVAL_HPP_
#define LPM_EVAL_HPP_

#include <algorithm>
#include <span>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/decode.hpp"
#include "lpm/ngram_lm.hpp"
#include "lpm/seq2seq.hpp"

namespace lpm {

struct ErrorCounts {
  long substitutions = 0;
  long insertions = 0;
  long deletions = 0;
  long ref_len = 0;

  long errors() const { return substitutions + insertions + deletions; }
  double rate() const { return static_cast<double>(errors()) / static_cast<double>(ref_len); }

  ErrorCounts &operator+=(const ErrorCounts &o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    ref_len += o.ref_len;
    return *this;
  }
};

/// Levenshtein alignment with unit costs.  The traceback prefers
/// substitution (or match), then deletion, then insertion.
inline ErrorCounts edit_rate(std::span<const TokenId> ref, std::span<const TokenId> hyp) {
  if (ref.empty()) throw Error("eval", "empty reference");
  const size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d[i - 1][j] + 1,
                          d[i][j - 1] + 1});
  ErrorCounts c;
  c.ref_len = static_cast<long>(n);
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

/// Percentage of the low-to-high resource error gap recovered by `x`.
inline double werr(double wer_low_resource, double wer_high_resource, double x) {
  if (wer_low_resource == wer_high_resource)
    throw Error("eval", "WERR undefined: low- and high-resource WERs are equal");
  return 100.0 * (wer_low_resource - x) / (wer_low_resource - wer_high_resource);
}

/// Corpus-level error counts of greedy output against gold transcripts
/// (content tokens only).  CER and WER coincide for this single-granularity
/// vocabulary.
inline ErrorCounts corpus_errors(const ModelConfig &cfg, const ParamVector &p,
                                 std::span<const Utterance> utts,
                                 std::vector<TokenSeq> *hyps_out = nullptr) {
  ErrorCounts total;
  for (const auto &u : utts) {
    if (!u.gold) throw Error("eval", "utterance " + u.id + " has no transcript");
    const Hypothesis h = greedy_decode(cfg, p, u, default_max_steps(u));
    total += edit_rate(u.gold->content(), h.tokens.content());
    if (hyps_out) hyps_out->push_back(h.tokens);
  }
  return total;
}

inline double corpus_wer(const ModelConfig &cfg, const ParamVector &p,
                         std::span<const Utterance> utts) {
  return corpus_errors(cfg, p, utts).rate();
}

/// Token perplexity under `lm` of the model's greedy transcripts.
template <LanguageModel LM>
double hypothesis_ppl(const LM &lm, const ModelConfig &cfg, const ParamVector &p,
                      std::span<const Utterance> dev, int max_steps = 0) {
  if (dev.empty()) throw Error("eval", "empty evaluation set");
  std::vector<TokenSeq> hyps;
  for (const auto &u : dev)
    hyps.push_back(greedy_decode(cfg, p, u, max_steps > 0 ? max_steps : default_max_steps(u)).tokens);
  return token_perplexity(lm, hyps);
}

}  // namespace lpm

#endif  // LPM_EVAL_HPP_
