// Copyright 2026  The lpmlab Authors
// Licensed under the Apache License, Version 2.0 (the "License").

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "lpm/synth.hpp"
#include "lpm/trainer.hpp"
#include "test_util.hpp"

namespace lpm {
namespace {

// A small task and model so whole training runs take well under a second.
struct Fixture {
  TaskShape shape;
  DatasetBundle data;
  NGramLM lm;
  ModelConfig cfg;
  ParamVector init;

  Fixture() {
    shape.n_content = 6;
    shape.obs_alphabet = 8;
    shape.max_len = 5;
    shape.lm_branching = 2;
    shape.confusion_group = 2;
    shape.eos_prob = 0.3;
    data = sample_corpus(make_true_lm(shape), make_channel(shape), SplitSizes{24, 30, 300, 16, 4},
                         shape.max_len, Rng(3));
    lm = train_lm(data.unpaired_text, data.vocab, 2);
    cfg = testing_util::tiny_config(shape.n_content, shape.obs_alphabet);
    init = init_params(cfg, 9);
    for (double &v : init.values()) v *= 10.0;
  }

  ExperimentConfig config() const {
    ExperimentConfig c;
    c.batch_size = 3;
    c.total_steps = 30;
    c.sup_steps = 30;
    c.eval_period = 10;
    c.T = 5;
    c.dev_subset = 8;
    c.label_sample = 10;
    c.lr = 0.2;
    return c;
  }
};

const Fixture &fx() {
  static const Fixture f;
  return f;
}

std::string bytes(const ParamVector &p) {
  std::ostringstream os;
  save_checkpoint(Checkpoint{p, 0, 0.0, fx().cfg.hash(), "none"}, fx().cfg, os);
  return os.str();
}

TEST(Schedule, OneToFourCycle) {
  const std::vector<BatchKind> want{BatchKind::kPaired, BatchKind::kUnpaired, BatchKind::kUnpaired,
                                    BatchKind::kUnpaired, BatchKind::kUnpaired};
  for (long s = 0; s < 5; ++s) EXPECT_EQ(schedule_batches(1, 4, s), want[s]);
  for (long s = 0; s < 20; ++s) EXPECT_EQ(schedule_batches(1, 0, s), BatchKind::kPaired);
  EXPECT_THROW(schedule_batches(0, 0, 0), Error);
  EXPECT_THROW(schedule_batches(-1, 4, 0), Error);
}

TEST(Schedule, PairedFractionOverAnyWindow) {
  for (long start : {0L, 1L, 3L, 777L, 12345L}) {
    int paired = 0;
    for (long s = start; s < start + 5000; ++s) paired += schedule_batches(1, 4, s) == BatchKind::kPaired;
    EXPECT_EQ(paired, 1000) << "window starting at " << start;
  }
}

TEST(ProposalDecision, Rules) {
  EXPECT_TRUE(proposal_update_decision(Strategy::kOffBetter, 1000, 1000, 0.19, 0.20));
  EXPECT_FALSE(proposal_update_decision(Strategy::kOffBetter, 999, 1000, 0.01, 0.20));
  EXPECT_FALSE(proposal_update_decision(Strategy::kOffBetter, 1000, 1000, 0.20, 0.20));
  EXPECT_TRUE(proposal_update_decision(Strategy::kOffAlways, 2000, 1000, 0.5, 0.1));
  EXPECT_FALSE(proposal_update_decision(Strategy::kOffAlways, 2001, 1000, 0.0, 0.1));
  EXPECT_FALSE(proposal_update_decision(Strategy::kOffNever, 1000, 1000, 0.0, 1.0));
  EXPECT_TRUE(proposal_update_decision(Strategy::kOnPolicy, 7, 1000, 1.0, 0.0));
  EXPECT_THROW(proposal_update_decision(Strategy::kOffBetter, 0, 1000, 0.1, 0.2), Error);
}

TEST(LearningRate, HalvesEveryPeriod) {
  const ExperimentConfig c;
  EXPECT_DOUBLE_EQ(lr_at(c, 1), 5e-2);
  EXPECT_DOUBLE_EQ(lr_at(c, 8000), 5e-2);
  EXPECT_DOUBLE_EQ(lr_at(c, 8001), 2.5e-2);
  EXPECT_DOUBLE_EQ(lr_at(c, 16001), 1.25e-2);
  EXPECT_DOUBLE_EQ(lr_at(c, 20000), 1.25e-2);
}

TEST(Config, DefaultsAndTextRoundTrip) {
  const ExperimentConfig d;
  EXPECT_EQ(d.k, 4);
  EXPECT_DOUBLE_EQ(d.alpha, 0.2);
  EXPECT_EQ(d.mix_l, 1);
  EXPECT_EQ(d.mix_u, 4);
  EXPECT_EQ(d.T, 1000);
  EXPECT_EQ(d.strategy, Strategy::kOffBetter);
  EXPECT_DOUBLE_EQ(d.filter.r_lb, 0.95);
  EXPECT_DOUBLE_EQ(d.filter.r_ub, 1.05);

  ExperimentConfig c;
  c.set("k", "8");
  c.set("mix", "2:3");
  c.set("strategy", "off_never");
  c.set("objective", "kd");
  c.set("alpha", "0.35");
  ExperimentConfig back;
  for (const auto &[key, value] : c.items()) back.set(key, value);
  EXPECT_EQ(back.describe(), c.describe());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_NE(c.hash(), d.hash());
  EXPECT_THROW(c.set("beam", "4"), Error);
  EXPECT_THROW(c.set("k", "4x"), Error);
  EXPECT_THROW(c.set("mix", "14"), Error);
  EXPECT_THROW(c.set("strategy", "sometimes"), Error);
  c.set("k", "0");
  EXPECT_THROW(c.validate(), Error);
}

TEST(Metrics, RowFormat) {
  MetricsRow r{12, "semi", 0.25, 0.25, 1.5, 3, 2, std::nullopt, 4.0};
  EXPECT_EQ(format_metrics_row(r), "12,semi,0.250000,0.250000,1.500000,3,2,,4.000000");
  EXPECT_EQ(std::string(kMetricsHeader),
            "step,phase,dev_wer,dev_cer,loss,skipped,proposal_updates,label_quality_wer,hyp_ppl");
}

TEST(EpochSampler, EachEpochIsAPermutation) {
  EpochSampler s(7, Rng(4));
  for (int epoch = 0; epoch < 5; ++epoch) {
    std::set<int> seen;
    for (int i = 0; i < 7; ++i) seen.insert(s.next());
    EXPECT_EQ(seen.size(), 7u);
  }
  EXPECT_THROW(EpochSampler(0, Rng(1)), Error);
}

TEST(Supervised, FixedBatchLossDecreasesOverFiftySteps) {
  // Default model size and learning rate, one fixed batch of eight.
  const TaskShape shape;
  const auto data = sample_corpus(make_true_lm(shape), make_channel(shape), SplitSizes{8, 0, 0, 0, 0},
                                  shape.max_len, Rng(5));
  ModelConfig cfg;
  cfg.vocab_size = data.vocab.size();
  cfg.eos_id = data.vocab.eos_id();
  cfg.obs_alphabet_size = shape.obs_alphabet;
  const ExperimentConfig c;
  std::vector<LossTerm> terms;
  for (const auto &u : data.paired) terms.push_back({&u, *u.gold, 1.0 / 8});
  int monotone = 0;
  for (uint64_t seed : {1, 2, 3}) {
    ParamVector p = init_params(cfg, seed);
    double prev = 0.0;
    bool ok = true;
    for (int step = 1; step <= 50; ++step) {
      double loss = 0.0;
      const ParamVector g = gradient(cfg, p, terms, &loss);
      if (step > 1 && !(loss < prev)) ok = false;
      prev = loss;
      sgd_update(p, g, lr_at(c, step));
    }
    monotone += ok;
  }
  EXPECT_GE(monotone, 2);
}

TEST(Supervised, TagsAreOrderedAndRunsAreDeterministic) {
  auto c = fx().config();
  c.sup_steps = 60;
  c.threshold_c = 0.95;
  c.threshold_b = 0.85;
  const auto a = train_supervised_baseline(c, fx().cfg, fx().data, &fx().lm);
  const auto b = train_supervised_baseline(c, fx().cfg, fx().data, &fx().lm);
  ASSERT_TRUE(a.checkpoints.count("A"));
  for (const auto &[tag, ck] : a.checkpoints) EXPECT_EQ(bytes(ck.params), bytes(b.checkpoints.at(tag).params));
  if (a.checkpoints.count("B")) {
    EXPECT_LE(a.checkpoints.at("A").dev_cer, a.checkpoints.at("B").dev_cer);
    EXPECT_LE(a.checkpoints.at("B").dev_cer, c.threshold_b);
  }
  if (a.checkpoints.count("C") && a.checkpoints.count("B")) {
    EXPECT_LE(a.checkpoints.at("B").dev_cer, a.checkpoints.at("C").dev_cer);
  }
  for (const auto &row : a.rows) EXPECT_GE(row.dev_wer, a.checkpoints.at("A").dev_cer);

  c.threshold_c = -1.0;
  c.threshold_b = -1.0;
  c.sup_steps = 5;
  const auto none = train_supervised_baseline(c, fx().cfg, fx().data);
  EXPECT_FALSE(none.checkpoints.count("B"));
  EXPECT_EQ(none.warnings.size(), 2u);
}

TEST(Semi, ReplayGivesByteIdenticalMetrics) {
  const auto c = fx().config();
  std::ostringstream m1, m2, p1, p2;
  train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init, SemiLogs{&m1, &p1});
  train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init, SemiLogs{&m2, &p2});
  EXPECT_EQ(m1.str(), m2.str());
  EXPECT_EQ(p1.str(), p2.str());
  EXPECT_EQ(m1.str().rfind(std::string(kMetricsHeader) + "\n", 0), 0u);
}

TEST(Semi, OffNeverKeepsProposalBitIdentical) {
  auto c = fx().config();
  c.strategy = Strategy::kOffNever;
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  EXPECT_EQ(bytes(r.proposal), bytes(fx().init));
  EXPECT_NE(bytes(r.online), bytes(fx().init));
  for (const auto &e : r.proposal_events) EXPECT_FALSE(e.updated);
  for (const auto &row : r.rows) EXPECT_EQ(row.proposal_updates, 0);
  // Beams from the proposal match beams from the initial parameters.
  for (const auto &u : fx().data.unpaired_speech) {
    const Beam a = beam_search(fx().cfg, r.proposal, u, 4, default_max_steps(u));
    const Beam b = beam_search(fx().cfg, fx().init, u, 4, default_max_steps(u));
    ASSERT_EQ(a.hyps.size(), b.hyps.size());
    for (size_t i = 0; i < a.hyps.size(); ++i) EXPECT_EQ(a.hyps[i].tokens, b.hyps[i].tokens);
  }
}

TEST(Semi, OffBetterAcceptedCerStrictlyDecreases) {
  auto c = fx().config();
  c.total_steps = 60;
  c.T = 3;
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  ASSERT_EQ(r.proposal_events.size(), 20u);
  std::vector<double> accepted;
  double current = 2.0;
  for (const auto &e : r.proposal_events) {
    if (e.updated) {
      accepted.push_back(e.proposal_cer);
      EXPECT_EQ(e.proposal_cer, e.online_cer);
    }
    if (!accepted.empty()) current = accepted.back();
    if (!e.updated && !accepted.empty()) {
      EXPECT_EQ(e.proposal_cer, current);
    }
  }
  ASSERT_GE(accepted.size(), 2u);
  for (size_t i = 1; i < accepted.size(); ++i) EXPECT_LT(accepted[i], accepted[i - 1]);
  EXPECT_EQ(r.rows.back().proposal_updates, static_cast<long>(accepted.size()));
}

TEST(Semi, OnPolicyProposalIsTheOnlineModel) {
  auto c = fx().config();
  c.strategy = Strategy::kOnPolicy;
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  EXPECT_EQ(bytes(r.proposal), bytes(r.online));
  EXPECT_TRUE(r.proposal_events.empty());
}

TEST(Semi, ReferenceLengthsComeFromInitialProposalOnce) {
  auto c = fx().config();
  c.strategy = Strategy::kOffAlways;
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  ASSERT_EQ(r.ref_lengths.size(), fx().data.unpaired_speech.size());
  for (size_t i = 0; i < r.ref_lengths.size(); ++i) {
    const auto &u = fx().data.unpaired_speech[i];
    EXPECT_EQ(r.ref_lengths[i], greedy_decode(fx().cfg, fx().init, u, default_max_steps(u)).tokens.length());
  }
  c.ref_len_mode = RefLenMode::kOracle;
  const auto o = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  for (size_t i = 0; i < o.ref_lengths.size(); ++i) EXPECT_EQ(o.ref_lengths[i], fx().data.unpaired_gold[i].length());
}

TEST(Semi, ZeroAlphaUnderOffNeverIsSupervisedContinuation) {
  auto c = fx().config();
  c.strategy = Strategy::kOffNever;
  c.alpha = 0.0;
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);

  // Replay only the paired steps with the same sampler stream.
  ParamVector p = fx().init;
  EpochSampler sampler(fx().data.paired.size(), Rng(c.seed).derive(detail::kPairedStream));
  for (long step = 1; step <= c.total_steps; ++step) {
    if (schedule_batches(c.mix_l, c.mix_u, step - 1) != BatchKind::kPaired) continue;
    std::vector<LossTerm> terms;
    for (int i = 0; i < c.batch_size; ++i) {
      const Utterance &u = fx().data.paired[sampler.next()];
      terms.push_back({&u, *u.gold, 1.0 / c.batch_size});
    }
    sgd_update(p, gradient(fx().cfg, p, terms, nullptr), lr_at(c, step));
  }
  EXPECT_EQ(bytes(r.online), bytes(p));
}

TEST(Semi, DoublingAlphaDoublesLoggedUnpairedLoss) {
  auto c = fx().config();
  c.mix_l = 0;
  c.mix_u = 1;
  c.total_steps = 1;
  c.eval_period = 1;
  c.filter = LengthFilter{0.0, 1e9};
  const auto one = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  c.alpha *= 2.0;
  const auto two = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  ASSERT_EQ(one.rows.size(), 2u);
  ASSERT_GT(one.rows[1].loss, 0.0);
  EXPECT_EQ(two.rows[1].loss, 2.0 * one.rows[1].loss);
}

TEST(Semi, LabelQualityStartsAtInitialProposalWer) {
  const auto c = fx().config();
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  const auto sample = label_quality_sample(c, fx().data);
  EXPECT_EQ(sample.size(), 10u);
  EXPECT_EQ(*r.rows.front().label_quality_wer, corpus_wer(fx().cfg, fx().init, sample));
  const auto again = label_quality_sample(c, fx().data);
  for (size_t i = 0; i < sample.size(); ++i) EXPECT_EQ(sample[i].id, again[i].id);
  EXPECT_EQ(r.rows.front().phase, "init");
  EXPECT_EQ(r.rows.front().step, 0);
}

TEST(Semi, BaselineObjectivesRun) {
  for (const char *obj : {"kd", "pl"}) {
    auto c = fx().config();
    c.set("objective", obj);
    const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
    EXPECT_EQ(r.rows.back().step, c.total_steps);
    EXPECT_EQ(r.rows.back().skipped, 0);
    EXPECT_EQ(r.final_dev_wer, r.rows.back().dev_wer);
  }
}

TEST(Semi, EmptyFilteredBeamsAreSkipped) {
  auto c = fx().config();
  c.filter = LengthFilter{50.0, 60.0};
  const auto r = train_semi(c, fx().cfg, fx().data, fx().lm, fx().init, fx().init);
  // 24 of the 30 steps are unpaired, each with batch_size utterances.
  EXPECT_EQ(r.rows.back().skipped, 24L * c.batch_size);
}

}  // namespace
}  // namespace lpm
