// lpm/core.hpp

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

#ifndef LPM_CORE_HPP_
#define LPM_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lpm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Error raised by any module; `module()` names the component that detected
/// the problem so the CLI can attribute it.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string &what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string &module() const { return module_; }

 private:
  std::string module_;
};

using TokenId = int;

/// Output alphabet. The EOS token is an ordinary member of `tokens`.
class Vocab {
 public:
  Vocab() = default;
  Vocab(std::vector<std::string> tokens, TokenId eos_id)
      : tokens_(std::move(tokens)), eos_id_(eos_id) {
    if (tokens_.size() < 2)
      throw Error("core", "vocab needs at least one content token and EOS");
    if (eos_id_ < 0 || eos_id_ >= static_cast<TokenId>(tokens_.size()))
      throw Error("core", "eos_id out of range");
    for (size_t i = 0; i < tokens_.size(); ++i) {
      auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
      if (!inserted) throw Error("core", "duplicate vocab token '" + tokens_[i] + "'");
    }
  }

  /// `n_content` symbols named w0..w{n-1} followed by "$" as EOS.
  static Vocab Synthetic(int n_content) {
    std::vector<std::string> t;
    for (int i = 0; i < n_content; ++i) t.push_back("w" + std::to_string(i));
    t.push_back("$");
    return Vocab(std::move(t), n_content);
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  TokenId eos_id() const { return eos_id_; }
  const std::string &token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string> &tokens() const { return tokens_; }
  std::optional<TokenId> find(const std::string &s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> tokens_;
  TokenId eos_id_ = 0;
  std::unordered_map<std::string, TokenId> index_;
};

/// A target sequence; always terminated by exactly one EOS.
class TokenSeq {
 public:
  TokenSeq() = default;

  /// Validates `ids` against `vocab_size`/`eos`; throws on violation.
  TokenSeq(std::vector<TokenId> ids, int vocab_size, TokenId eos)
      : ids_(std::move(ids)) {
    if (ids_.empty() || ids_.back() != eos)
      throw Error("core", "token sequence must end with EOS");
    for (size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] < 0 || ids_[i] >= vocab_size)
        throw Error("core", "token id out of range");
      if (ids_[i] == eos && i + 1 != ids_.size())
        throw Error("core", "interior EOS in token sequence");
    }
  }

  /// Content tokens followed by an appended EOS.
  static TokenSeq FromContent(std::span<const TokenId> content, const Vocab &v) {
    std::vector<TokenId> ids(content.begin(), content.end());
    ids.push_back(v.eos_id());
    return TokenSeq(std::move(ids), v.size(), v.eos_id());
  }

  const std::vector<TokenId> &ids() const { return ids_; }
  /// Number of content tokens (EOS excluded).
  int length() const { return static_cast<int>(ids_.size()) - 1; }
  std::span<const TokenId> content() const {
    return std::span<const TokenId>(ids_).first(ids_.size() - 1);
  }
  bool operator==(const TokenSeq &o) const { return ids_ == o.ids_; }
  auto operator<=>(const TokenSeq &o) const { return ids_ <=> o.ids_; }

  std::string str() const {
    std::ostringstream os;
    for (size_t i = 0; i < ids_.size(); ++i) os << (i ? " " : "") << ids_[i];
    return os.str();
  }

 private:
  std::vector<TokenId> ids_;
};

/// An observation sequence, optionally with its transcript.
struct Utterance {
  std::string id;
  std::vector<int> frames;
  std::optional<TokenSeq> gold;
  std::optional<int> ref_len;
};

// ---------------------------------------------------------------------------
// Random numbers.  SplitMix64 evaluated at (seed, counter): a counter-based
// generator whose draws depend only on integer arithmetic, so sequences are
// identical across platforms and standard libraries.

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : seed_(splitmix64(seed)), counter_(0) {}

  uint64_t next_u64() { return splitmix64(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).  Rejection sampling removes modulo bias.
  uint64_t below(uint64_t n) {
    if (n == 0) throw Error("core", "Rng::below(0)");
    const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                           std::numeric_limits<uint64_t>::max() % n;
    uint64_t r;
    do r = next_u64(); while (r >= limit);
    return r % n;
  }

  /// Index drawn from non-negative weights (need not be normalized).
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total, acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    for (size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0) return static_cast<int>(i);
    throw Error("core", "categorical over all-zero weights");
  }

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  /// Independent generator for sub-stream `stream`; does not advance *this.
  Rng derive(uint64_t stream) const {
    Rng r;
    r.seed_ = splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    return r;
  }

  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_;
  uint64_t counter_;
};

// ---------------------------------------------------------------------------
// Log-space arithmetic.

inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw Error("core", "log_sum_exp of empty list");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

inline double log_sum_exp(std::initializer_list<double> values) {
  return log_sum_exp(std::span<const double>(values.begin(), values.size()));
}

/// Softmax of log scores; throws when every score is -inf.
inline std::vector<double> normalize_log_weights(std::span<const double> log_scores) {
  if (log_scores.empty()) throw Error("core", "normalize_log_weights of empty list");
  const double z = log_sum_exp(log_scores);
  if (z == kNegInf) throw Error("core", "degenerate support: all log scores are -inf");
  std::vector<double> w(log_scores.size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_scores[i] - z);
  return w;
}

/// 64-bit FNV-1a, used for config and manifest hashes.
inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  static const char *d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = d[v & 0xf];
  return s;
}

/// Parses whitespace-separated integers.
inline std::vector<int> parse_ints(std::string_view s) {
  std::vector<int> out;
  std::istringstream is{std::string(s)};
  int v;
  while (is >> v) out.push_back(v);
  if (!is.eof()) throw Error("core", "malformed integer list: '" + std::string(s) + "'");
  return out;
}

inline std::string join_ints(std::span<const int> v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace lpm

#endif  // LPM_CORE_HPP_
