// lpm/config.hpp

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

// Flat "key = value" configuration files, task and model settings in that
// form, run directories and run manifests.

#ifndef LPM_CONFIG_HPP_
#define LPM_CONFIG_HPP_

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/seq2seq.hpp"
#include "lpm/synth.hpp"
#include "lpm/trainer.hpp"

namespace lpm {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {
inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline long parse_long(const std::string &key, const std::string &v) {
  size_t used = 0;
  long r = 0;
  try {
    r = std::stol(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error("config", "bad integer for " + key + ": '" + v + "'");
  return r;
}

inline double parse_real(const std::string &key, const std::string &v) {
  size_t used = 0;
  double r = 0;
  try {
    r = std::stod(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw Error("config", "bad number for " + key + ": '" + v + "'");
  return r;
}
}  // namespace detail

/// Parses "key = value" lines.  Blank lines and lines starting with '#'
/// are skipped; a repeated key keeps its last value.
inline KeyValues parse_key_values(std::istream &is, const std::string &origin = "<input>") {
  KeyValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config", origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(t.substr(0, eq)), value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw Error("config", origin + ":" + std::to_string(lineno) + ": empty key");
    bool replaced = false;
    for (auto &kv : out)
      if (kv.first == key) {
        kv.second = value;
        replaced = true;
      }
    if (!replaced) out.emplace_back(key, value);
  }
  return out;
}

inline KeyValues read_key_values(const std::filesystem::path &p) {
  std::ifstream is(p);
  if (!is) throw Error("config", "cannot open " + p.string());
  return parse_key_values(is, p.string());
}

inline std::string format_key_values(const KeyValues &kv) {
  std::string s;
  for (const auto &[k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Task shape and split sizes.

inline KeyValues task_items(const TaskShape &s, const SplitSizes &z) {
  auto d = [](double v) { return format_double(v); };
  return {{"n_content", std::to_string(s.n_content)},
          {"obs_alphabet", std::to_string(s.obs_alphabet)},
          {"max_len", std::to_string(s.max_len)},
          {"lm_branching", std::to_string(s.lm_branching)},
          {"lm_focus", d(s.lm_focus)},
          {"eos_prob", d(s.eos_prob)},
          {"confusion_group", std::to_string(s.confusion_group)},
          {"emit_own", d(s.emit_own)},
          {"emit_group", d(s.emit_group)},
          {"cross_group", s.cross_group ? "1" : "0"},
          {"duration_peak", d(s.duration_peak)},
          {"eos_contrast", d(s.eos_contrast)},
          {"generator_seed", std::to_string(s.generator_seed)},
          {"paired", std::to_string(z.paired)},
          {"unpaired_speech", std::to_string(z.unpaired_speech)},
          {"unpaired_text", std::to_string(z.unpaired_text)},
          {"dev", std::to_string(z.dev)},
          {"test", std::to_string(z.test)}};
}

/// Returns false for keys that are not task settings.
inline bool task_set(TaskShape &s, SplitSizes &z, const std::string &key, const std::string &v) {
  using detail::parse_long;
  using detail::parse_real;
  if (key == "n_content") s.n_content = static_cast<int>(parse_long(key, v));
  else if (key == "obs_alphabet") s.obs_alphabet = static_cast<int>(parse_long(key, v));
  else if (key == "max_len") s.max_len = static_cast<int>(parse_long(key, v));
  else if (key == "lm_branching") s.lm_branching = static_cast<int>(parse_long(key, v));
  else if (key == "lm_focus") s.lm_focus = parse_real(key, v);
  else if (key == "eos_prob") s.eos_prob = parse_real(key, v);
  else if (key == "confusion_group") s.confusion_group = static_cast<int>(parse_long(key, v));
  else if (key == "emit_own") s.emit_own = parse_real(key, v);
  else if (key == "emit_group") s.emit_group = parse_real(key, v);
  else if (key == "cross_group") s.cross_group = parse_long(key, v) != 0;
  else if (key == "duration_peak") s.duration_peak = parse_real(key, v);
  else if (key == "eos_contrast") s.eos_contrast = parse_real(key, v);
  else if (key == "generator_seed") s.generator_seed = static_cast<uint64_t>(parse_long(key, v));
  else if (key == "paired") z.paired = static_cast<int>(parse_long(key, v));
  else if (key == "unpaired_speech") z.unpaired_speech = static_cast<int>(parse_long(key, v));
  else if (key == "unpaired_text") z.unpaired_text = static_cast<int>(parse_long(key, v));
  else if (key == "dev") z.dev = static_cast<int>(parse_long(key, v));
  else if (key == "test") z.test = static_cast<int>(parse_long(key, v));
  else return false;
  return true;
}

// ---------------------------------------------------------------------------
// Model dimensions.

inline KeyValues model_items(const ModelConfig &m) {
  return {{"embed_dim", std::to_string(m.embed_dim)},
          {"encoder_hidden", std::to_string(m.encoder_hidden)},
          {"decoder_hidden", std::to_string(m.decoder_hidden)},
          {"attention_dim", std::to_string(m.attention_dim)},
          {"label_smoothing", format_double(m.label_smoothing)}};
}

inline bool model_set(ModelConfig &m, const std::string &key, const std::string &v) {
  using detail::parse_long;
  if (key == "embed_dim") m.embed_dim = static_cast<int>(parse_long(key, v));
  else if (key == "encoder_hidden") m.encoder_hidden = static_cast<int>(parse_long(key, v));
  else if (key == "decoder_hidden") m.decoder_hidden = static_cast<int>(parse_long(key, v));
  else if (key == "attention_dim") m.attention_dim = static_cast<int>(parse_long(key, v));
  else if (key == "label_smoothing") m.label_smoothing = detail::parse_real(key, v);
  else return false;
  return true;
}

/// Experiment plus model settings under one flat namespace.
struct RunSettings {
  ExperimentConfig exp;
  ModelConfig model;

  KeyValues items() const {
    KeyValues kv = exp.items();
    for (auto &item : model_items(model)) kv.push_back(std::move(item));
    return kv;
  }

  void set(const std::string &key, const std::string &value) {
    if (model_set(model, key, value)) return;
    exp.set(key, value);
  }

  void apply(const KeyValues &kv) {
    for (const auto &[k, v] : kv) set(k, v);
  }
};

// ---------------------------------------------------------------------------
// Dataset manifests.

inline constexpr const char *kDataManifest = "manifest.txt";

struct DataInfo {
  TaskShape shape;
  SplitSizes sizes;
  uint64_t seed = 0;
  std::string manifest_hash;
};

inline KeyValues data_manifest_items(const TaskShape &s, const SplitSizes &z, uint64_t seed) {
  KeyValues kv{{"seed", std::to_string(seed)}};
  for (auto &item : task_items(s, z)) kv.push_back(std::move(item));
  return kv;
}

inline DataInfo read_data_info(const std::filesystem::path &dir) {
  const auto path = dir / kDataManifest;
  std::ifstream is(path);
  if (!is) throw Error("config", "no dataset manifest at " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  DataInfo info;
  info.manifest_hash = hex64(fnv1a64(buf.str()));
  for (const auto &[k, v] : parse_key_values(buf, path.string())) {
    if (k == "seed") info.seed = static_cast<uint64_t>(detail::parse_long(k, v));
    else if (!task_set(info.shape, info.sizes, k, v)) throw Error("config", "unknown manifest key " + k);
  }
  return info;
}

inline DatasetBundle load_dataset(const std::filesystem::path &dir, DataInfo *info_out = nullptr) {
  const DataInfo info = read_data_info(dir);
  if (info_out) *info_out = info;
  return read_bundle(dir, Vocab::Synthetic(info.shape.n_content), info.shape.obs_alphabet);
}

/// The model configuration for a dataset: vocabulary and alphabet from the
/// data, dimensions from the settings.
inline ModelConfig model_for(const DataInfo &info, ModelConfig dims) {
  const Vocab v = Vocab::Synthetic(info.shape.n_content);
  dims.vocab_size = v.size();
  dims.eos_id = v.eos_id();
  dims.obs_alphabet_size = info.shape.obs_alphabet;
  dims.validate();
  return dims;
}

// ---------------------------------------------------------------------------
// Run directories and manifests.

inline std::filesystem::path runs_root() {
  const char *env = std::getenv("LPMLAB_RUNS_DIR");
  return (env && *env) ? std::filesystem::path(env) : std::filesystem::path("runs");
}

inline std::filesystem::path run_dir(const std::string &config_hash, uint64_t seed) {
  return runs_root() / (config_hash + "-" + std::to_string(seed));
}

inline std::string file_hash(const std::filesystem::path &p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("config", "cannot open " + p.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return hex64(fnv1a64(buf.str()));
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string data_hash;
  uint64_t seed = 0;
  std::vector<std::string> artifacts;  // file names relative to the run directory
  std::string started;
  std::string finished;

  KeyValues items() const {
    KeyValues kv{{"command", command},       {"config_hash", config_hash}, {"data_hash", data_hash},
                 {"seed", std::to_string(seed)}, {"started", started},      {"finished", finished}};
    std::string joined;
    for (const auto &a : artifacts) joined += (joined.empty() ? "" : " ") + a;
    kv.emplace_back("artifacts", joined);
    return kv;
  }

  static RunManifest FromItems(const KeyValues &kv) {
    RunManifest m;
    for (const auto &[k, v] : kv) {
      if (k == "command") m.command = v;
      else if (k == "config_hash") m.config_hash = v;
      else if (k == "data_hash") m.data_hash = v;
      else if (k == "seed") m.seed = static_cast<uint64_t>(detail::parse_long(k, v));
      else if (k == "started") m.started = v;
      else if (k == "finished") m.finished = v;
      else if (k == "artifacts") {
        std::istringstream is(v);
        std::string a;
        while (is >> a) m.artifacts.push_back(a);
      } else {
        throw Error("config", "unknown run manifest key " + k);
      }
    }
    return m;
  }

  void write(const std::filesystem::path &dir) const {
    std::ofstream os(dir / "run_manifest.txt");
    os << format_key_values(items());
    if (!os) throw Error("config", "cannot write run manifest in " + dir.string());
  }
};

}  // namespace lpm

#endif  // LPM_CONFIG_HPP_
