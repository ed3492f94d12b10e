// lpm/trainer.hpp

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

#ifndef LPM_TRAINER_HPP_
#define LPM_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/decode.hpp"
#include "lpm/eval.hpp"
#include "lpm/ngram_lm.hpp"
#include "lpm/objectives.hpp"
#include "lpm/seq2seq.hpp"
#include "lpm/synth.hpp"

namespace lpm {

enum class Strategy { kOnPolicy, kOffNever, kOffAlways, kOffBetter };
enum class Objective { kLpm, kKdUniform, kPseudoLabel };
enum class BatchKind { kPaired, kUnpaired };

inline Strategy parse_strategy(const std::string &s) {
  if (s == "on_policy") return Strategy::kOnPolicy;
  if (s == "off_never") return Strategy::kOffNever;
  if (s == "off_always") return Strategy::kOffAlways;
  if (s == "off_better") return Strategy::kOffBetter;
  throw Error("trainer", "unknown strategy '" + s + "'");
}

inline const char *to_string(Strategy s) {
  switch (s) {
    case Strategy::kOnPolicy: return "on_policy";
    case Strategy::kOffNever: return "off_never";
    case Strategy::kOffAlways: return "off_always";
    case Strategy::kOffBetter: return "off_better";
  }
  return "?";
}

inline Objective parse_objective(const std::string &s) {
  if (s == "lpm") return Objective::kLpm;
  if (s == "kd") return Objective::kKdUniform;
  if (s == "pl") return Objective::kPseudoLabel;
  throw Error("trainer", "unknown objective '" + s + "'");
}

inline const char *to_string(Objective o) {
  switch (o) {
    case Objective::kLpm: return "lpm";
    case Objective::kKdUniform: return "kd";
    case Objective::kPseudoLabel: return "pl";
  }
  return "?";
}

/// Every training knob.  Fields are serialized as a flat key/value list;
/// the config hash is taken over that list.
struct ExperimentConfig {
  // semi-supervised phase
  int k = 4;
  double alpha = 0.2;
  int mix_l = 1;
  int mix_u = 4;
  int T = 1000;
  Strategy strategy = Strategy::kOffBetter;
  LengthFilter filter;
  RefLenMode ref_len_mode = RefLenMode::kGreedy;
  std::string init_q = "A";
  std::string init_r = "A";
  Objective objective = Objective::kLpm;
  int kd_k = 4;             // hypotheses used by the uniform-KD target
  double fusion_lambda = 0.5;  // PL teacher decoding and fused reference lengths

  // optimization
  double lr = 5e-2;
  double lr_decay_factor = 2.0;
  int lr_decay_period = 8000;
  int batch_size = 8;
  int total_steps = 20000;
  uint64_t seed = 1;

  // prior
  int lm_order = 3;
  double lm_fraction = 1.0;

  // supervised baseline
  int sup_steps = 12000;
  double threshold_c = 0.60;
  double threshold_b = 0.45;

  // bookkeeping
  int eval_period = 1000;
  int dev_subset = 64;
  int label_sample = 200;

  std::vector<std::pair<std::string, std::string>> items() const {
    auto d = [](double v) { return format_double(v); };
    return {{"k", std::to_string(k)},
            {"alpha", d(alpha)},
            {"mix", std::to_string(mix_l) + ":" + std::to_string(mix_u)},
            {"T", std::to_string(T)},
            {"strategy", to_string(strategy)},
            {"r_lb", d(filter.r_lb)},
            {"r_ub", d(filter.r_ub)},
            {"ref_len_mode", to_string(ref_len_mode)},
            {"init_q", init_q},
            {"init_r", init_r},
            {"objective", to_string(objective)},
            {"kd_k", std::to_string(kd_k)},
            {"fusion_lambda", d(fusion_lambda)},
            {"lr", d(lr)},
            {"lr_decay_factor", d(lr_decay_factor)},
            {"lr_decay_period", std::to_string(lr_decay_period)},
            {"batch_size", std::to_string(batch_size)},
            {"total_steps", std::to_string(total_steps)},
            {"seed", std::to_string(seed)},
            {"lm_order", std::to_string(lm_order)},
            {"lm_fraction", d(lm_fraction)},
            {"sup_steps", std::to_string(sup_steps)},
            {"threshold_c", d(threshold_c)},
            {"threshold_b", d(threshold_b)},
            {"eval_period", std::to_string(eval_period)},
            {"dev_subset", std::to_string(dev_subset)},
            {"label_sample", std::to_string(label_sample)}};
  }

  /// Assigns one field from its textual form.  Unknown keys throw.
  void set(const std::string &key, const std::string &value) {
    auto to_int = [&](const std::string &v) {
      size_t used = 0;
      long r = 0;
      try {
        r = std::stol(v, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used == 0 || used != v.size()) throw Error("trainer", "bad integer for " + key + ": '" + v + "'");
      return static_cast<int>(r);
    };
    auto to_real = [&](const std::string &v) {
      size_t used = 0;
      double r = 0;
      try {
        r = std::stod(v, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (used == 0 || used != v.size()) throw Error("trainer", "bad number for " + key + ": '" + v + "'");
      return r;
    };
    if (key == "k") k = to_int(value);
    else if (key == "alpha") alpha = to_real(value);
    else if (key == "mix") {
      const auto c = value.find(':');
      if (c == std::string::npos) throw Error("trainer", "mix must look like m_l:m_u, got '" + value + "'");
      mix_l = to_int(value.substr(0, c));
      mix_u = to_int(value.substr(c + 1));
    } else if (key == "mix_l") mix_l = to_int(value);
    else if (key == "mix_u") mix_u = to_int(value);
    else if (key == "T") T = to_int(value);
    else if (key == "strategy") strategy = parse_strategy(value);
    else if (key == "r_lb") filter.r_lb = to_real(value);
    else if (key == "r_ub") filter.r_ub = to_real(value);
    else if (key == "ref_len_mode") ref_len_mode = parse_ref_len_mode(value);
    else if (key == "init_q") init_q = value;
    else if (key == "init_r") init_r = value;
    else if (key == "objective") objective = parse_objective(value);
    else if (key == "kd_k") kd_k = to_int(value);
    else if (key == "fusion_lambda") fusion_lambda = to_real(value);
    else if (key == "lr") lr = to_real(value);
    else if (key == "lr_decay_factor") lr_decay_factor = to_real(value);
    else if (key == "lr_decay_period") lr_decay_period = to_int(value);
    else if (key == "batch_size") batch_size = to_int(value);
    else if (key == "total_steps") total_steps = to_int(value);
    else if (key == "seed") seed = static_cast<uint64_t>(to_int(value));
    else if (key == "lm_order") lm_order = to_int(value);
    else if (key == "lm_fraction") lm_fraction = to_real(value);
    else if (key == "sup_steps") sup_steps = to_int(value);
    else if (key == "threshold_c") threshold_c = to_real(value);
    else if (key == "threshold_b") threshold_b = to_real(value);
    else if (key == "eval_period") eval_period = to_int(value);
    else if (key == "dev_subset") dev_subset = to_int(value);
    else if (key == "label_sample") label_sample = to_int(value);
    else throw Error("trainer", "unknown config key '" + key + "'");
  }

  void validate() const {
    if (k < 1) throw Error("trainer", "k must be >= 1");
    if (alpha < 0.0) throw Error("trainer", "alpha must be >= 0");
    if (mix_l < 0 || mix_u < 0 || mix_l + mix_u == 0) throw Error("trainer", "invalid mixing ratio");
    if (T < 1) throw Error("trainer", "T must be >= 1");
    filter.validate();
    if (kd_k < 1) throw Error("trainer", "kd_k must be >= 1");
    if (!(lr > 0.0)) throw Error("trainer", "lr must be > 0");
    if (lr_decay_factor < 1.0) throw Error("trainer", "lr_decay_factor must be >= 1");
    if (lr_decay_period < 1) throw Error("trainer", "lr_decay_period must be >= 1");
    if (batch_size < 1) throw Error("trainer", "batch_size must be >= 1");
    if (total_steps < 0 || sup_steps < 0) throw Error("trainer", "step counts must be >= 0");
    if (lm_order < 1) throw Error("trainer", "lm_order must be >= 1");
    if (!(lm_fraction > 0.0 && lm_fraction <= 1.0)) throw Error("trainer", "lm_fraction must be in (0, 1]");
    if (eval_period < 1 || dev_subset < 1 || label_sample < 1)
      throw Error("trainer", "eval_period, dev_subset and label_sample must be >= 1");
  }

  std::string describe() const {
    std::string s;
    for (const auto &[key, value] : items()) s += key + " = " + value + "\n";
    return s;
  }

  std::string hash() const { return hex64(fnv1a64(describe())); }
};

/// Cyclic schedule: the first mix_l steps of each cycle are paired.
inline BatchKind schedule_batches(int mix_l, int mix_u, long step) {
  if (mix_l < 0 || mix_u < 0 || mix_l + mix_u == 0) throw Error("trainer", "invalid mixing ratio");
  if (step < 0) throw Error("trainer", "step must be >= 0");
  return step % (mix_l + mix_u) < mix_l ? BatchKind::kPaired : BatchKind::kUnpaired;
}

inline bool proposal_update_decision(Strategy s, long step, int T, double dev_cer_online,
                                     double dev_cer_proposal) {
  if (step < 1) throw Error("trainer", "step must be >= 1");
  switch (s) {
    case Strategy::kOnPolicy: return true;
    case Strategy::kOffNever: return false;
    case Strategy::kOffAlways: return step % T == 0;
    case Strategy::kOffBetter: return step % T == 0 && dev_cer_online < dev_cer_proposal;
  }
  return false;
}

/// Learning rate in effect at 1-based `step`.
inline double lr_at(const ExperimentConfig &c, long step) {
  const long drops = (step - 1) / c.lr_decay_period;
  return c.lr / std::pow(c.lr_decay_factor, static_cast<double>(drops));
}

struct MetricsRow {
  long step = 0;
  std::string phase;
  double dev_wer = 0.0;
  double dev_cer = 0.0;
  double loss = 0.0;
  long skipped = 0;
  long proposal_updates = 0;
  std::optional<double> label_quality_wer;
  std::optional<double> hyp_ppl;
};

inline constexpr const char *kMetricsHeader =
    "step,phase,dev_wer,dev_cer,loss,skipped,proposal_updates,label_quality_wer,hyp_ppl";

inline std::string format_metrics_row(const MetricsRow &r) {
  char buf[64];
  auto f = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  return std::to_string(r.step) + "," + r.phase + "," + f(r.dev_wer) + "," + f(r.dev_cer) + "," + f(r.loss) +
         "," + std::to_string(r.skipped) + "," + std::to_string(r.proposal_updates) + "," +
         (r.label_quality_wer ? f(*r.label_quality_wer) : "") + "," + (r.hyp_ppl ? f(*r.hyp_ppl) : "");
}

/// One entry per proposal check.
struct ProposalEvent {
  long step = 0;
  double online_cer = 0.0;
  double proposal_cer = 0.0;  // after the decision
  bool updated = false;
};

inline constexpr const char *kProposalHeader = "step,online_cer,proposal_cer,updated";

inline std::string format_proposal_event(const ProposalEvent &e) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%ld,%.6f,%.6f,%d", e.step, e.online_cer, e.proposal_cer, e.updated ? 1 : 0);
  return buf;
}

/// Sequential reader over a shuffled index order, reshuffled each epoch.
class EpochSampler {
 public:
  EpochSampler(size_t n, Rng rng) : order_(n), pos_(n), rng_(rng) {
    if (n == 0) throw Error("trainer", "cannot sample from an empty split");
    for (size_t i = 0; i < n; ++i) order_[i] = static_cast<int>(i);
  }

  int next() {
    if (pos_ == order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<int> order_;
  size_t pos_;
  Rng rng_;
};

namespace detail {

// Stream ids under the run seed.
inline constexpr uint64_t kPairedStream = 1;
inline constexpr uint64_t kUnpairedStream = 2;
inline constexpr uint64_t kDevSubsetStream = 3;
inline constexpr uint64_t kLabelSampleStream = 4;
inline constexpr uint64_t kInitStream = 5;

inline std::vector<int> sample_indices(size_t n, size_t m, Rng rng) {
  std::vector<int> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  idx.resize(std::min(n, m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::vector<Utterance> gather(std::span<const Utterance> src, const std::vector<int> &idx) {
  std::vector<Utterance> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(src[i]);
  return out;
}

struct EvalResult {
  double wer = 0.0;
  std::optional<double> hyp_ppl;
};

template <LanguageModel LM>
EvalResult evaluate(const ModelConfig &cfg, const ParamVector &p, std::span<const Utterance> dev, const LM *lm) {
  std::vector<TokenSeq> hyps;
  EvalResult r;
  r.wer = corpus_errors(cfg, p, dev, &hyps).rate();
  if (lm) r.hyp_ppl = token_perplexity(*lm, hyps);
  return r;
}

inline void check_finite_loss(double loss, long step, const std::vector<std::string> &ids) {
  if (std::isfinite(loss)) return;
  std::string msg = "non-finite loss at step " + std::to_string(step) + ", batch:";
  for (const auto &id : ids) msg += " " + id;
  throw Error("trainer", msg);
}

}  // namespace detail

/// Fixed, seed-chosen dev subset used by the proposal update criterion.
inline std::vector<Utterance> dev_subset(const ExperimentConfig &c, std::span<const Utterance> dev) {
  return detail::gather(dev, detail::sample_indices(dev.size(), c.dev_subset,
                                                    Rng(c.seed).derive(detail::kDevSubsetStream)));
}

/// Fixed, seed-chosen sample of unpaired speech with sealed transcripts.
inline std::vector<Utterance> label_quality_sample(const ExperimentConfig &c, const DatasetBundle &data) {
  const auto all = data.unsealed_unpaired();
  return detail::gather(all, detail::sample_indices(all.size(), c.label_sample,
                                                    Rng(c.seed).derive(detail::kLabelSampleStream)));
}

/// Greedy WER of `proposal` on the label-quality sample.
inline double track_label_quality(const ModelConfig &cfg, const ParamVector &proposal,
                                  std::span<const Utterance> sample) {
  return corpus_wer(cfg, proposal, sample);
}

struct SupervisedResult {
  std::map<std::string, Checkpoint> checkpoints;  // keyed by tag
  std::vector<MetricsRow> rows;
  std::vector<std::string> warnings;
};

/// Supervised training from scratch on the paired split.  Tag C is the
/// first evaluation at or below threshold_c, B the first at or below
/// threshold_b, and A the best evaluation overall.
template <LanguageModel LM = NGramLM>
SupervisedResult train_supervised_baseline(const ExperimentConfig &c, const ModelConfig &cfg,
                                           const DatasetBundle &data, const LM *lm = nullptr,
                                           std::ostream *metrics = nullptr) {
  c.validate();
  if (data.paired.empty()) throw Error("trainer", "paired split is empty");
  if (data.dev.empty()) throw Error("trainer", "dev split is empty");
  const Rng root(c.seed);
  ParamVector p = init_params(cfg, root.derive(detail::kInitStream).next_u64());
  EpochSampler sampler(data.paired.size(), root.derive(detail::kPairedStream));
  SupervisedResult res;
  if (metrics) *metrics << kMetricsHeader << "\n";
  auto record = [&](long step, double loss) {
    const auto ev = detail::evaluate(cfg, p, data.dev, lm);
    MetricsRow row{step, "sup", ev.wer, ev.wer, loss, 0, 0, std::nullopt, ev.hyp_ppl};
    res.rows.push_back(row);
    if (metrics) *metrics << format_metrics_row(row) << "\n" << std::flush;
    auto tag = [&](const std::string &t) {
      Checkpoint ck{p, step, ev.wer, cfg.hash(), t};
      res.checkpoints.insert_or_assign(t, std::move(ck));
    };
    if (!res.checkpoints.count("C") && ev.wer <= c.threshold_c) tag("C");
    if (!res.checkpoints.count("B") && ev.wer <= c.threshold_b) tag("B");
    if (!res.checkpoints.count("A") || ev.wer < res.checkpoints.at("A").dev_cer) tag("A");
  };
  record(0, 0.0);
  double loss_sum = 0.0;
  long loss_n = 0;
  for (long step = 1; step <= c.sup_steps; ++step) {
    std::vector<LossTerm> terms;
    std::vector<std::string> ids;
    for (int i = 0; i < c.batch_size; ++i) {
      const Utterance &u = data.paired[sampler.next()];
      if (!u.gold) throw Error("trainer", "paired utterance " + u.id + " has no transcript");
      terms.push_back({&u, *u.gold, 1.0 / c.batch_size});
      ids.push_back(u.id);
    }
    double loss = 0.0;
    const ParamVector g = gradient(cfg, p, terms, &loss);
    detail::check_finite_loss(loss, step, ids);
    sgd_update(p, g, lr_at(c, step));
    loss_sum += loss;
    ++loss_n;
    if (step % c.eval_period == 0 || step == c.sup_steps) {
      record(step, loss_sum / static_cast<double>(loss_n));
      loss_sum = 0.0;
      loss_n = 0;
    }
  }
  for (const char *t : {"C", "B"})
    if (!res.checkpoints.count(t))
      res.warnings.push_back(std::string("dev CER never reached the threshold for tag ") + t);
  return res;
}

struct SemiResult {
  ParamVector online;
  ParamVector proposal;
  std::vector<MetricsRow> rows;
  std::vector<ProposalEvent> proposal_events;
  std::vector<int> ref_lengths;
  double final_dev_wer = 0.0;
  std::optional<double> final_hyp_ppl;
};

/// Sinks for the run logs; any may be null.
struct SemiLogs {
  std::ostream *metrics = nullptr;
  std::ostream *proposals = nullptr;
};

/// The alternating paired/unpaired loop.  `init_q` and `init_r` seed the
/// online and proposal parameters.  Under on_policy the proposal is the
/// online model itself.
template <LanguageModel LM>
SemiResult train_semi(const ExperimentConfig &c, const ModelConfig &cfg, const DatasetBundle &data, const LM &lm,
                      const ParamVector &init_q, const ParamVector &init_r, SemiLogs logs = {}) {
  c.validate();
  if (c.mix_l > 0 && data.paired.empty()) throw Error("trainer", "paired split is empty");
  if (c.mix_u > 0 && data.unpaired_speech.empty()) throw Error("trainer", "unpaired speech split is empty");
  if (data.dev.empty()) throw Error("trainer", "dev split is empty");
  if (!init_q.same_layout(init_r)) throw Error("trainer", "init_q and init_r have different layouts");

  const Rng root(c.seed);
  const bool on_policy = c.strategy == Strategy::kOnPolicy;
  SemiResult res{init_q, init_r, {}, {}, {}, 0.0, std::nullopt};
  ParamVector &q = res.online;
  ParamVector &r = res.proposal;
  auto proposal = [&]() -> const ParamVector & { return on_policy ? q : r; };

  const std::vector<Utterance> dev_small = dev_subset(c, data.dev);
  const std::vector<Utterance> lq_sample = label_quality_sample(c, data);
  const Fusion<LM> fusion{&lm, c.fusion_lambda};

  // Reference lengths from the initial proposal, computed once.
  const auto &speech = data.unpaired_speech;
  res.ref_lengths.resize(speech.size());
  for (size_t i = 0; i < speech.size(); ++i) {
    Utterance u = speech[i];
    if (c.ref_len_mode == RefLenMode::kOracle) u.gold = data.unpaired_gold.at(i);
    res.ref_lengths[i] = estimate_ref_length(cfg, init_r, u, c.ref_len_mode, &fusion, default_max_steps(u), c.k);
  }

  // Pseudo-labels from the fixed teacher, computed once.
  std::vector<WeightedTargets> pseudo;
  if (c.objective == Objective::kPseudoLabel) {
    pseudo.reserve(speech.size());
    for (const auto &u : speech)
      pseudo.push_back(pseudo_label_target(cfg, init_r, lm, c.fusion_lambda, u, c.k, default_max_steps(u)));
  }

  double proposal_cer = corpus_wer(cfg, proposal(), dev_small);
  long updates = 0, skipped = 0;
  if (logs.metrics) *logs.metrics << kMetricsHeader << "\n";
  if (logs.proposals) *logs.proposals << kProposalHeader << "\n";
  auto record = [&](long step, const char *phase, double loss) {
    const auto ev = detail::evaluate(cfg, q, data.dev, &lm);
    MetricsRow row{step,    phase,   ev.wer,
                   ev.wer,  loss,    skipped,
                   updates, track_label_quality(cfg, proposal(), lq_sample), ev.hyp_ppl};
    res.rows.push_back(row);
    if (logs.metrics) *logs.metrics << format_metrics_row(row) << "\n" << std::flush;
    return ev;
  };
  record(0, "init", 0.0);

  EpochSampler paired(std::max<size_t>(data.paired.size(), 1), root.derive(detail::kPairedStream));
  EpochSampler unpaired(std::max<size_t>(speech.size(), 1), root.derive(detail::kUnpairedStream));
  double loss_sum = 0.0;
  long loss_n = 0;
  for (long step = 1; step <= c.total_steps; ++step) {
    std::vector<LossTerm> terms;
    std::vector<std::string> ids;
    const double n = static_cast<double>(c.batch_size);
    if (schedule_batches(c.mix_l, c.mix_u, step - 1) == BatchKind::kPaired) {
      for (int i = 0; i < c.batch_size; ++i) {
        const Utterance &u = data.paired[paired.next()];
        terms.push_back({&u, *u.gold, 1.0 / n});
        ids.push_back(u.id);
      }
    } else {
      for (int i = 0; i < c.batch_size; ++i) {
        const int j = unpaired.next();
        const Utterance &u = speech[j];
        ids.push_back(u.id);
        WeightedTargets t;
        if (c.objective == Objective::kPseudoLabel) {
          t = pseudo[j];
        } else {
          const Beam beam = beam_search(cfg, proposal(), u, c.k, default_max_steps(u));
          t = c.objective == Objective::kLpm ? local_prior(beam, lm, res.ref_lengths[j], c.filter)
                                             : kd_uniform_targets(beam, c.kd_k);
        }
        if (t.empty()) {
          ++skipped;
          continue;
        }
        for (const auto &item : t.items) terms.push_back({&u, item.y, c.alpha * item.weight / n});
      }
    }
    if (!terms.empty()) {
      double loss = 0.0;
      const ParamVector g = gradient(cfg, q, terms, &loss);
      detail::check_finite_loss(loss, step, ids);
      sgd_update(q, g, lr_at(c, step));
      loss_sum += loss;
    }
    ++loss_n;

    if (!on_policy && step % c.T == 0) {
      const double online_cer = corpus_wer(cfg, q, dev_small);
      const bool update = proposal_update_decision(c.strategy, step, c.T, online_cer, proposal_cer);
      if (update) {
        r = snapshot(q);
        proposal_cer = online_cer;
        ++updates;
      }
      ProposalEvent e{step, online_cer, proposal_cer, update};
      res.proposal_events.push_back(e);
      if (logs.proposals) *logs.proposals << format_proposal_event(e) << "\n" << std::flush;
    }
    if (step % c.eval_period == 0 || step == c.total_steps) {
      record(step, "semi", loss_sum / static_cast<double>(loss_n));
      loss_sum = 0.0;
      loss_n = 0;
    }
  }
  if (on_policy) r = q;
  const auto fin = res.rows.back();
  res.final_dev_wer = fin.dev_wer;
  res.final_hyp_ppl = fin.hyp_ppl;
  return res;
}

}  // namespace lpm

#endif  // LPM_TRAINER_HPP_
