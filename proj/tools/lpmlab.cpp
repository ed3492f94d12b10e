// tools/lpmlab.cpp

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

// Command-line driver: data generation, LM training, supervised and
// semi-supervised training, decoding, evaluation and sweeps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lpm/config.hpp"
#include "lpm/decode.hpp"
#include "lpm/eval.hpp"
#include "lpm/ngram_lm.hpp"
#include "lpm/objectives.hpp"
#include "lpm/synth.hpp"
#include "lpm/trainer.hpp"

namespace fs = std::filesystem;
using namespace lpm;

namespace {

// Help text for a default value: "0.20000000000000001" reads as "0.2".
std::string show_default(const std::string &v) {
  char *end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') return "default " + v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return std::string("default ") + buf;
}

// Options shared by the training commands: a config file plus one flag per
// setting.  Flags override the file.
struct SettingsFlags {
  std::string config_file;
  std::map<std::string, std::string> flags;

  void attach(CLI::App *cmd) {
    cmd->add_option("--config", config_file, "key = value settings file")->check(CLI::ExistingFile);
    for (const auto &[key, value] : RunSettings{}.items())
      cmd->add_option("--" + key, flags[key], show_default(value));
  }

  RunSettings resolve(const std::map<std::string, std::string> &extra = {}) const {
    RunSettings s;
    if (!config_file.empty()) s.apply(read_key_values(config_file));
    for (const auto &[k, v] : flags)
      if (!v.empty()) s.set(k, v);
    for (const auto &[k, v] : extra) s.set(k, v);
    s.exp.validate();
    return s;
  }
};

void write_text_file(const fs::path &p, const std::string &text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) throw Error("cli", "cannot write " + p.string());
}

std::vector<Utterance> split_of(const DatasetBundle &b, const std::string &name) {
  if (name == "dev") return b.dev;
  if (name == "test") return b.test;
  if (name == "paired") return b.paired;
  if (name == "unpaired") return b.unsealed_unpaired();
  throw Error("cli", "unknown split '" + name + "' (dev, test, paired, unpaired)");
}

std::string join_tokens(const TokenSeq &y) {
  const auto c = y.content();
  return join_ints(std::span<const int>(c.data(), c.size()));
}

// ---------------------------------------------------------------------------

struct GenData {
  std::string out = "data";
  uint64_t seed = 1;
  std::map<std::string, std::string> flags;

  void attach(CLI::App *cmd) {
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "corpus seed");
    for (const auto &[key, value] : task_items(TaskShape{}, SplitSizes{}))
      cmd->add_option("--" + key, flags[key], show_default(value));
  }

  void run() const {
    TaskShape shape;
    SplitSizes sizes;
    for (const auto &[k, v] : flags)
      if (!v.empty()) task_set(shape, sizes, k, v);
    const DatasetBundle b = sample_corpus(make_true_lm(shape), make_channel(shape), sizes, shape.max_len, Rng(seed));
    const std::string manifest = format_key_values(data_manifest_items(shape, sizes, seed));
    std::vector<std::string> lines;
    std::istringstream is(manifest);
    for (std::string l; std::getline(is, l);) lines.push_back(l);
    write_bundle(out, b, lines);
    std::printf("manifest_hash = %s\n", read_data_info(out).manifest_hash.c_str());
  }
};

struct TrainLm {
  std::string data, out = "lm.txt";
  int order = 3;
  double fraction = 1.0, add_k = NGramSmoothing{}.add_k;

  void attach(CLI::App *cmd) {
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--out", out, "output LM file");
    cmd->add_option("--order", order, "n-gram order");
    cmd->add_option("--fraction", fraction, "leading fraction of the text corpus to use");
    cmd->add_option("--add_k", add_k, "additive smoothing constant");
  }

  void run() const {
    const DatasetBundle b = load_dataset(data);
    NGramSmoothing sm;
    sm.add_k = add_k;
    const NGramLM lm = train_lm(b.unpaired_text, b.vocab, order, sm, fraction);
    save_lm(lm, out);
    std::printf("dev_perplexity = %.6f\n", token_perplexity(lm, [&] {
                  std::vector<TokenSeq> g;
                  for (const auto &u : b.dev) g.push_back(*u.gold);
                  return g;
                }()));
  }
};

struct EvalLm {
  std::string lm, data, split = "dev";

  void attach(CLI::App *cmd) {
    cmd->add_option("--lm", lm, "LM file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--split", split, "dev, test, paired or unpaired");
  }

  void run() const {
    const NGramLM model = load_lm(lm);
    const DatasetBundle b = load_dataset(data);
    std::vector<TokenSeq> gold;
    for (const auto &u : split_of(b, split)) gold.push_back(*u.gold);
    std::printf("token_perplexity = %.6f\n", token_perplexity(model, gold));
  }
};

struct TrainSup {
  std::string data, lm;
  SettingsFlags settings;

  void attach(CLI::App *cmd) {
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--lm", lm, "LM for hypothesis perplexity in the metrics")->check(CLI::ExistingFile);
    settings.attach(cmd);
  }

  void run() const {
    const RunSettings s = settings.resolve();
    DataInfo info;
    const DatasetBundle b = load_dataset(data, &info);
    const ModelConfig cfg = model_for(info, s.model);
    std::optional<NGramLM> model;
    if (!lm.empty()) model = load_lm(lm);
    const std::string hash = hex64(fnv1a64("train-sup\n" + format_key_values(s.items()) + info.manifest_hash +
                                           (lm.empty() ? "" : file_hash(lm))));
    const fs::path dir = run_dir(hash, s.exp.seed);
    fs::create_directories(dir);
    RunManifest m{"train-sup", hash, info.manifest_hash, s.exp.seed, {"config.txt", "metrics.csv"}, utc_timestamp(), ""};
    write_text_file(dir / "config.txt", format_key_values(s.items()));
    std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
    const auto res = train_supervised_baseline(s.exp, cfg, b, model ? &*model : nullptr, &metrics);
    for (const auto &[tag, ck] : res.checkpoints) {
      const std::string name = "ckpt_" + tag + ".ckpt";
      save_checkpoint(ck, cfg, (dir / name).string());
      m.artifacts.push_back(name);
      std::printf("tag %s step %ld dev_cer %.6f\n", tag.c_str(), ck.step, ck.dev_cer);
    }
    for (const auto &w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    m.finished = utc_timestamp();
    m.write(dir);
    std::printf("run_dir = %s\n", dir.string().c_str());
  }
};

struct TrainSemi {
  std::string data, lm, sup_run;
  SettingsFlags settings;

  void attach(CLI::App *cmd) {
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--lm", lm, "LM file (the prior)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sup-run", sup_run, "train-sup run directory holding the tagged checkpoints")
        ->required()
        ->check(CLI::ExistingDirectory);
    settings.attach(cmd);
  }

  fs::path run(const std::map<std::string, std::string> &extra = {}) const {
    const RunSettings s = settings.resolve(extra);
    DataInfo info;
    const DatasetBundle b = load_dataset(data, &info);
    const NGramLM prior = load_lm(lm);
    auto ckpt_path = [&](const std::string &tag) {
      const fs::path p = fs::path(sup_run) / ("ckpt_" + tag + ".ckpt");
      if (!fs::exists(p)) throw Error("cli", "no checkpoint tagged " + tag + " in " + sup_run);
      return p;
    };
    const fs::path q_path = ckpt_path(s.exp.init_q), r_path = ckpt_path(s.exp.init_r);
    ModelConfig stored;
    const Checkpoint q = load_checkpoint(q_path.string(), &stored);
    const Checkpoint r = load_checkpoint(r_path.string());
    const ModelConfig cfg = model_for(info, s.model);
    if (stored.describe() != cfg.describe())
      throw Error("cli", "checkpoint model (" + stored.describe() + ") does not match settings (" + cfg.describe() + ")");

    const std::string hash = hex64(fnv1a64("train-semi\n" + format_key_values(s.items()) + info.manifest_hash +
                                           file_hash(lm) + file_hash(q_path) + file_hash(r_path)));
    const fs::path dir = run_dir(hash, s.exp.seed);
    fs::create_directories(dir);
    RunManifest m{"train-semi", hash, info.manifest_hash, s.exp.seed,
                  {"config.txt", "metrics.csv", "proposals.csv", "online.ckpt", "proposal.ckpt"},
                  utc_timestamp(), ""};
    write_text_file(dir / "config.txt", format_key_values(s.items()));
    std::ofstream metrics(dir / "metrics.csv", std::ios::binary), proposals(dir / "proposals.csv", std::ios::binary);
    const auto res = train_semi(s.exp, cfg, b, prior, q.params, r.params, SemiLogs{&metrics, &proposals});
    const long steps = s.exp.total_steps;
    save_checkpoint(Checkpoint{res.online, steps, res.final_dev_wer, cfg.hash(), "none"}, cfg, (dir / "online.ckpt").string());
    save_checkpoint(Checkpoint{res.proposal, steps, 0.0, cfg.hash(), "none"}, cfg, (dir / "proposal.ckpt").string());
    m.finished = utc_timestamp();
    m.write(dir);
    std::printf("final dev_wer %.6f hyp_ppl %.6f\n", res.final_dev_wer, res.final_hyp_ppl.value_or(0.0));
    std::printf("run_dir = %s\n", dir.string().c_str());
    return dir;
  }
};

struct Decode {
  std::string ckpt, data, split = "dev", lm;
  int k = 1;
  double lambda = ExperimentConfig{}.fusion_lambda;
  bool dump = false;

  void attach(CLI::App *cmd, bool dump_beam) {
    dump = dump_beam;
    cmd->add_option("--ckpt", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--split", split, "dev, test, paired or unpaired");
    cmd->add_option("--k", k, "beam size (1 = greedy)");
    cmd->add_option("--lm", lm, "LM for shallow fusion / prior scores")->check(CLI::ExistingFile);
    cmd->add_option("--lambda", lambda, "shallow fusion weight");
  }

  void run() const {
    if (k < 1) throw Error("cli", "--k must be >= 1");
    ModelConfig cfg;
    const Checkpoint ck = load_checkpoint(ckpt, &cfg);
    const DatasetBundle b = load_dataset(data);
    std::optional<NGramLM> model;
    if (!lm.empty()) model = load_lm(lm);
    const Fusion<> fusion{model ? &*model : nullptr, dump ? 0.0 : lambda};
    for (const auto &u : split_of(b, split)) {
      const int ms = default_max_steps(u);
      if (!dump) {
        const TokenSeq y = (k == 1 && !model) ? greedy_decode(cfg, ck.params, u, ms).tokens
                                              : beam_search(cfg, ck.params, u, k, ms, &fusion).hyps.front().tokens;
        std::printf("%s\t%s\n", u.id.c_str(), join_tokens(y).c_str());
        continue;
      }
      const Beam beam = beam_search<NGramLM>(cfg, ck.params, u, k, ms);
      for (size_t i = 0; i < beam.hyps.size(); ++i) {
        const auto &h = beam.hyps[i];
        std::string lm_col;
        if (model) lm_col = std::to_string(lm_log_prob(*model, h.tokens));
        std::printf("%s\t%zu\t%.6f\t%s\t%s\n", u.id.c_str(), i, h.asr_logp, lm_col.c_str(), join_tokens(h.tokens).c_str());
      }
    }
  }
};

struct Eval {
  std::string ckpt, data, split = "dev", lm;

  void attach(CLI::App *cmd) {
    cmd->add_option("--ckpt", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "dataset directory")->required();
    cmd->add_option("--split", split, "dev, test, paired or unpaired");
    cmd->add_option("--lm", lm, "LM for hypothesis perplexity")->check(CLI::ExistingFile);
  }

  void run() const {
    ModelConfig cfg;
    const Checkpoint ck = load_checkpoint(ckpt, &cfg);
    const DatasetBundle b = load_dataset(data);
    const auto utts = split_of(b, split);
    std::optional<NGramLM> model;
    if (!lm.empty()) model = load_lm(lm);
    const auto ev = detail::evaluate(cfg, ck.params, utts, model ? &*model : nullptr);
    MetricsRow row{ck.step, "eval", ev.wer, ev.wer, 0.0, 0, 0, std::nullopt, ev.hyp_ppl};
    std::printf("%s\n%s\n", kMetricsHeader, format_metrics_row(row).c_str());
  }
};

// Exact-posterior equivalence and exhaustive-beam checks on small instances.
struct OracleCheck {
  uint64_t seed = 1;

  void attach(CLI::App *cmd) { cmd->add_option("--seed", seed, "instance seed"); }

  static bool report(const char *name, bool ok, double detail) {
    std::printf("%s %s (%.3g)\n", ok ? "PASS" : "FAIL", name, detail);
    return ok;
  }

  bool run() const {
    Rng rng(seed);
    bool ok = true;

    // Posterior vs local prior: tokens 0 and 1 share channel rows, so the
    // four strings {0,1}x{0,1} followed by token 2 have equal likelihood.
    TaskShape shape;
    shape.n_content = 3;
    shape.obs_alphabet = 4;
    shape.lm_branching = 2;
    shape.confusion_group = 1;
    shape.generator_seed = seed;
    const TrueLM lm = make_true_lm(shape);
    const Channel base = make_channel(shape);
    std::vector<std::vector<double>> dur, emit;
    for (int v = 0; v < base.num_tokens(); ++v) {
      dur.push_back(base.duration(v == 1 ? 0 : v));
      emit.push_back(base.emission(v == 1 ? 0 : v));
    }
    const Channel ch(dur, emit, shape.obs_alphabet);
    Utterance x;
    x.id = "oracle";
    x.frames = {0, 1, 0, 2, 3};
    const auto post = exact_posterior(x, lm, ch, 4);
    Beam beam;
    for (TokenId a : {0, 1})
      for (TokenId c : {0, 1})
        {
        Hypothesis h;
        h.tokens = TokenSeq::FromContent(std::vector<TokenId>{a, c, 2}, lm.vocab());
        beam.hyps.push_back(h);
      }
    beam.k = static_cast<int>(beam.hyps.size());
    double mass = 0.0;
    for (const auto &h : beam.hyps) mass += post.at(h.tokens);
    double worst = 0.0;
    for (const auto &item : local_prior(beam, lm, 3, LengthFilter{}).items)
      worst = std::max(worst, std::abs(item.weight - post.at(item.y) / mass));
    ok &= report("local prior equals restricted exact posterior", worst <= 1e-9, worst);

    // Exhaustive beam: 3 tokens + EOS, 3 steps, width 40 covers every string.
    ModelConfig cfg;
    cfg.embed_dim = cfg.encoder_hidden = cfg.decoder_hidden = cfg.attention_dim = 3;
    cfg.vocab_size = 4;
    cfg.eos_id = 3;
    cfg.obs_alphabet_size = 4;
    ParamVector p = init_params(cfg, rng.next_u64());
    for (double &w : p.values()) w *= 4.0;
    Utterance u;
    u.id = "beam";
    for (int i = 0; i < 4; ++i) u.frames.push_back(static_cast<int>(rng.below(4)));
    std::vector<std::pair<double, TokenSeq>> finished;
    for (const auto &y : enumerate_sequences(Vocab::Synthetic(3), 2))
      finished.emplace_back(score_sequence(cfg, p, u, y), y);
    finished.emplace_back(score_sequence(cfg, p, u, TokenSeq::FromContent(std::vector<TokenId>{}, Vocab::Synthetic(3))),
                          TokenSeq::FromContent(std::vector<TokenId>{}, Vocab::Synthetic(3)));
    std::sort(finished.begin(), finished.end(), [](const auto &a, const auto &b) { return a.first > b.first; });
    const Beam full = beam_search<NGramLM>(cfg, p, u, 40, 3);
    bool same = full.hyps.size() >= finished.size();
    for (size_t i = 0; same && i < finished.size(); ++i)
      same = full.hyps[i].finished && full.hyps[i].tokens == finished[i].second;
    ok &= report("exhaustive beam equals enumerated ranking", same, static_cast<double>(finished.size()));
    return ok;
  }
};

struct Sweep {
  std::vector<std::string> axes;
  TrainSemi semi;

  void attach(CLI::App *cmd) {
    cmd->add_option("--axis", axes, "key=v1,v2,... (repeatable)")->required();
    cmd->add_option("--data", semi.data, "dataset directory")->required();
    cmd->add_option("--lm", semi.lm, "LM file (the prior)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sup-run", semi.sup_run, "train-sup run directory")->required()->check(CLI::ExistingDirectory);
    semi.settings.attach(cmd);
  }

  void run() const {
    std::vector<std::pair<std::string, std::vector<std::string>>> grid;
    for (const auto &a : axes) {
      const auto eq = a.find('=');
      if (eq == std::string::npos || eq == 0) throw Error("cli", "bad --axis '" + a + "', expected key=v1,v2");
      std::vector<std::string> values;
      std::stringstream ss(a.substr(eq + 1));
      for (std::string v; std::getline(ss, v, ',');)
        if (!v.empty()) values.push_back(v);
      if (values.empty()) throw Error("cli", "axis " + a.substr(0, eq) + " has no values");
      grid.emplace_back(a.substr(0, eq), values);
    }
    std::vector<size_t> idx(grid.size(), 0);
    for (;;) {
      std::map<std::string, std::string> cell;
      std::string label;
      for (size_t i = 0; i < grid.size(); ++i) {
        cell[grid[i].first] = grid[i].second[idx[i]];
        label += (label.empty() ? "" : " ") + grid[i].first + "=" + grid[i].second[idx[i]];
      }
      std::printf("cell %s\n", label.c_str());
      std::fflush(stdout);
      semi.run(cell);
      size_t i = 0;
      while (i < grid.size() && ++idx[i] == grid[i].second.size()) idx[i++] = 0;
      if (i == grid.size()) break;
    }
  }
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"lpmlab: local prior matching on a synthetic transduction task"};
  app.require_subcommand(1);

  GenData gen;
  TrainLm train_lm_cmd;
  EvalLm eval_lm;
  TrainSup sup;
  TrainSemi semi;
  Decode decode, dump;
  Eval eval;
  OracleCheck oracle;
  Sweep sweep;

  gen.attach(app.add_subcommand("gen-data", "sample a synthetic corpus"));
  train_lm_cmd.attach(app.add_subcommand("train-lm", "fit the n-gram prior on unpaired text"));
  eval_lm.attach(app.add_subcommand("eval-lm", "token perplexity of a split's transcripts"));
  sup.attach(app.add_subcommand("train-sup", "supervised baseline with A/B/C checkpoint tags"));
  semi.attach(app.add_subcommand("train-semi", "semi-supervised training (lpm, kd or pl objective)"));
  decode.attach(app.add_subcommand("decode", "decode a split"), false);
  dump.attach(app.add_subcommand("dump-beam", "write beam hypotheses with ASR and LM scores"), true);
  eval.attach(app.add_subcommand("eval", "WER and hypothesis perplexity of a checkpoint"));
  oracle.attach(app.add_subcommand("oracle-check", "exact-posterior and exhaustive-beam checks"));
  sweep.attach(app.add_subcommand("sweep", "grid of train-semi runs"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen-data") gen.run();
    else if (name == "train-lm") train_lm_cmd.run();
    else if (name == "eval-lm") eval_lm.run();
    else if (name == "train-sup") sup.run();
    else if (name == "train-semi") semi.run();
    else if (name == "decode") decode.run();
    else if (name == "dump-beam") dump.run();
    else if (name == "eval") eval.run();
    else if (name == "oracle-check") return oracle.run() ? 0 : 1;
    else if (name == "sweep") sweep.run();
  } catch (const Error &e) {
    std::fprintf(stderr, "lpmlab: %s\n", e.what());
    return 1;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "lpmlab: %s\n", e.what());
    return 1;
  }
  return 0;
}
