// lpm/seq2seq.hpp

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

// Attention encoder-decoder over frame symbols.
//
//   encoder:  symbol embedding -> bidirectional GRU, H_t = [fwd_t; bwd_t]
//   init:     s_0 = tanh(W_init [fwd_{T-1}; bwd_0] + b_init)
//   decoder:  s_i = GRU([embed(y_{i-1}); c_{i-1}], s_{i-1})      (y_{-1} = BOS)
//             alpha = softmax(K^T W_q s_i / sqrt(A)),  K = W_k H
//             c_i = H alpha
//             o_i = tanh(W_h [s_i; c_i] + b_h)
//             log q(. | y_<i, x) = log_softmax(W_out o_i + b_out)
//
// GRU:  r = sig(W_r x + U_r h + b_r),  z = sig(W_z x + U_z h + b_z),
//       n = tanh(W_n x + b_n + r * (U_n h)),  h' = (1 - z) * n + z * h.
//
// Gradients are computed by explicit backpropagation through the unrolled
// graph, in a fixed order, so repeated calls are bit-identical.

#ifndef LPM_SEQ2SEQ_HPP_
#define LPM_SEQ2SEQ_HPP_

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "lpm/core.hpp"
#include "lpm/ngram_lm.hpp"

namespace lpm {

struct ModelConfig {
  int embed_dim = 16;
  int encoder_hidden = 32;  // per direction
  int decoder_hidden = 32;
  int attention_dim = 16;
  int vocab_size = 0;
  TokenId eos_id = 0;
  int obs_alphabet_size = 0;
  double label_smoothing = 0.0;

  int context_dim() const { return 2 * encoder_hidden; }
  TokenId bos_input() const { return vocab_size; }

  void validate() const {
    if (embed_dim < 1 || encoder_hidden < 1 || decoder_hidden < 1 || attention_dim < 1)
      throw Error("seq2seq", "model dimensions must be >= 1");
    if (vocab_size < 2 || eos_id < 0 || eos_id >= vocab_size)
      throw Error("seq2seq", "bad vocabulary in model config");
    if (obs_alphabet_size < 1) throw Error("seq2seq", "observation alphabet must be non-empty");
    if (!(label_smoothing >= 0.0 && label_smoothing < 0.5))
      throw Error("seq2seq", "label_smoothing must be in [0, 0.5)");
  }

  std::string describe() const {
    std::ostringstream os;
    os << "embed=" << embed_dim << " enc=" << encoder_hidden << " dec=" << decoder_hidden
       << " att=" << attention_dim << " vocab=" << vocab_size << " eos=" << eos_id
       << " obs=" << obs_alphabet_size << " ls=" << format_double(label_smoothing);
    return os.str();
  }

  std::string hash() const { return hex64(fnv1a64(describe())); }

  static ModelConfig Parse(const std::string &s) {
    ModelConfig c;
    std::istringstream is(s);
    std::string kv;
    while (is >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("seq2seq", "bad model descriptor field " + kv);
      const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "embed") c.embed_dim = std::stoi(v);
      else if (k == "enc") c.encoder_hidden = std::stoi(v);
      else if (k == "dec") c.decoder_hidden = std::stoi(v);
      else if (k == "att") c.attention_dim = std::stoi(v);
      else if (k == "vocab") c.vocab_size = std::stoi(v);
      else if (k == "eos") c.eos_id = std::stoi(v);
      else if (k == "obs") c.obs_alphabet_size = std::stoi(v);
      else if (k == "ls") c.label_smoothing = std::stod(v);
      else throw Error("seq2seq", "unknown model descriptor field " + k);
    }
    c.validate();
    return c;
  }
};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMat>;
using MatMap = Eigen::Map<RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Named tensors over one flat row-major buffer.
class ParamVector {
 public:
  struct Tensor {
    std::string name;
    std::vector<int> shape;
    size_t offset = 0;
    size_t size = 0;
  };

  void add(std::string name, std::vector<int> shape) {
    size_t n = 1;
    for (int d : shape) {
      if (d < 1) throw Error("seq2seq", "tensor dimension must be >= 1");
      n *= static_cast<size_t>(d);
    }
    tensors_.push_back({std::move(name), std::move(shape), data_.size(), n});
    data_.resize(data_.size() + n, 0.0);
  }

  const std::vector<Tensor> &tensors() const { return tensors_; }
  size_t total_count() const { return data_.size(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  int index_of(const std::string &name) const {
    for (size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name == name) return static_cast<int>(i);
    throw Error("seq2seq", "no tensor named " + name);
  }

  ConstMatMap mat(int i) const {
    const auto &t = tensors_[i];
    return ConstMatMap(data_.data() + t.offset, t.shape[0], t.shape.size() > 1 ? t.shape[1] : 1);
  }
  MatMap mat(int i) {
    const auto &t = tensors_[i];
    return MatMap(data_.data() + t.offset, t.shape[0], t.shape.size() > 1 ? t.shape[1] : 1);
  }
  ConstVecMap vec(int i) const {
    return ConstVecMap(data_.data() + tensors_[i].offset, tensors_[i].size);
  }
  VecMap vec(int i) { return VecMap(data_.data() + tensors_[i].offset, tensors_[i].size); }

  bool same_layout(const ParamVector &o) const {
    if (tensors_.size() != o.tensors_.size()) return false;
    for (size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name != o.tensors_[i].name || tensors_[i].shape != o.tensors_[i].shape)
        return false;
    return true;
  }

  ParamVector zeros_like() const {
    ParamVector z = *this;
    std::fill(z.data_.begin(), z.data_.end(), 0.0);
    return z;
  }

  bool operator==(const ParamVector &o) const { return same_layout(o) && data_ == o.data_; }

 private:
  std::vector<Tensor> tensors_;
  std::vector<double> data_;
};

namespace net {
// Tensor indices; order fixes the flat layout.
enum : int {
  kEncEmbed, kFwdW, kFwdU, kFwdB, kBwdW, kBwdU, kBwdB, kInitW, kInitB, kDecEmbed,
  kDecW, kDecU, kDecB, kAttKey, kAttQuery, kHidW, kHidB, kOutW, kOutB, kNumTensors
};
}  // namespace net

inline ParamVector make_layout(const ModelConfig &c) {
  c.validate();
  const int E = c.embed_dim, H = c.encoder_hidden, D = c.decoder_hidden, A = c.attention_dim;
  const int C = c.context_dim(), V = c.vocab_size, M = c.obs_alphabet_size;
  ParamVector p;
  p.add("enc.embed", {M, E});
  p.add("enc.fwd.W", {3 * H, E});
  p.add("enc.fwd.U", {3 * H, H});
  p.add("enc.fwd.b", {3 * H});
  p.add("enc.bwd.W", {3 * H, E});
  p.add("enc.bwd.U", {3 * H, H});
  p.add("enc.bwd.b", {3 * H});
  p.add("dec.init.W", {D, C});
  p.add("dec.init.b", {D});
  p.add("dec.embed", {V + 1, E});
  p.add("dec.gru.W", {3 * D, E + C});
  p.add("dec.gru.U", {3 * D, D});
  p.add("dec.gru.b", {3 * D});
  p.add("att.key", {A, C});
  p.add("att.query", {A, D});
  p.add("out.hidden.W", {D, D + C});
  p.add("out.hidden.b", {D});
  p.add("out.W", {V, D});
  p.add("out.b", {V});
  return p;
}

/// Uniform(-0.08, 0.08) everywhere except a zero output bias.
inline ParamVector init_params(const ModelConfig &c, uint64_t seed) {
  ParamVector p = make_layout(c);
  Rng rng(seed);
  for (double &v : p.values()) v = rng.uniform(-0.08, 0.08);
  p.vec(net::kOutB).setZero();
  return p;
}

struct Checkpoint {
  ParamVector params;
  long step = 0;
  double dev_cer = 0.0;
  std::string config_hash;
  std::string tag = "none";  // A, B, C or none
};

namespace detail {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

struct GruCache {
  VectorXd x, h_prev, r, z, n, un;
};

/// One GRU step.  `cache` may be null.
inline VectorXd gru_step(const ConstMatMap &W, const ConstMatMap &U, const ConstVecMap &b,
                         const VectorXd &x, const VectorXd &h, GruCache *cache) {
  const int n = static_cast<int>(h.size());
  const VectorXd a = W * x + b;
  const VectorXd u = U * h;
  VectorXd r(n), z(n), cand(n), out(n);
  for (int i = 0; i < n; ++i) {
    r[i] = sigmoid(a[i] + u[i]);
    z[i] = sigmoid(a[n + i] + u[n + i]);
    cand[i] = std::tanh(a[2 * n + i] + r[i] * u[2 * n + i]);
    out[i] = (1.0 - z[i]) * cand[i] + z[i] * h[i];
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = h;
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(cand);
    cache->un = u.segment(2 * n, n);
  }
  return out;
}

/// Backward through one GRU step.  Accumulates weight gradients and returns
/// (dx, dh_prev).
inline void gru_backward(const ConstMatMap &W, const ConstMatMap &U, const GruCache &c,
                         const VectorXd &dh, MatMap &dW, MatMap &dU, VecMap &db, VectorXd &dx,
                         VectorXd &dh_prev) {
  const int n = static_cast<int>(dh.size());
  VectorXd da(3 * n), du(3 * n);
  dh_prev.resize(n);
  for (int i = 0; i < n; ++i) {
    const double dn = dh[i] * (1.0 - c.z[i]);
    const double dz = dh[i] * (c.h_prev[i] - c.n[i]);
    const double dn_pre = dn * (1.0 - c.n[i] * c.n[i]);
    const double dz_pre = dz * c.z[i] * (1.0 - c.z[i]);
    const double dr_pre = dn_pre * c.un[i] * c.r[i] * (1.0 - c.r[i]);
    da[i] = dr_pre;
    da[n + i] = dz_pre;
    da[2 * n + i] = dn_pre;
    du[i] = dr_pre;
    du[n + i] = dz_pre;
    du[2 * n + i] = dn_pre * c.r[i];
    dh_prev[i] = dh[i] * c.z[i];
  }
  dW.noalias() += da * c.x.transpose();
  dU.noalias() += du * c.h_prev.transpose();
  db += da;
  dx.noalias() = W.transpose() * da;
  dh_prev.noalias() += U.transpose() * du;
}

struct EncoderState {
  MatrixXd H;   // C x T
  MatrixXd K;   // A x T
  VectorXd g;   // [fwd_{T-1}; bwd_0]
  VectorXd s0;  // initial decoder state
  std::vector<GruCache> fwd, bwd;
};

inline EncoderState encode(const ModelConfig &cfg, const ParamVector &p,
                           std::span<const int> frames, bool keep_cache) {
  using namespace net;
  const int T = static_cast<int>(frames.size());
  if (T == 0) throw Error("seq2seq", "utterance has no frames");
  const int Hd = cfg.encoder_hidden;
  EncoderState st;
  st.H.resize(cfg.context_dim(), T);
  if (keep_cache) {
    st.fwd.resize(T);
    st.bwd.resize(T);
  }
  const auto emb = p.mat(kEncEmbed);
  const auto fW = p.mat(kFwdW), fU = p.mat(kFwdU), bW = p.mat(kBwdW), bU = p.mat(kBwdU);
  const auto fb = p.vec(kFwdB), bb = p.vec(kBwdB);
  VectorXd h = VectorXd::Zero(Hd);
  for (int t = 0; t < T; ++t) {
    if (frames[t] < 0 || frames[t] >= cfg.obs_alphabet_size)
      throw Error("seq2seq", "frame symbol out of range");
    const VectorXd e = emb.row(frames[t]).transpose();
    h = gru_step(fW, fU, fb, e, h, keep_cache ? &st.fwd[t] : nullptr);
    st.H.col(t).head(Hd) = h;
  }
  h.setZero();
  for (int t = T - 1; t >= 0; --t) {
    const VectorXd e = emb.row(frames[t]).transpose();
    h = gru_step(bW, bU, bb, e, h, keep_cache ? &st.bwd[t] : nullptr);
    st.H.col(t).tail(Hd) = h;
  }
  st.g.resize(cfg.context_dim());
  st.g.head(Hd) = st.H.col(T - 1).head(Hd);
  st.g.tail(Hd) = st.H.col(0).tail(Hd);
  st.s0 = (p.mat(kInitW) * st.g + p.vec(kInitB)).array().tanh().matrix();
  st.K.noalias() = p.mat(kAttKey) * st.H;
  return st;
}

inline void log_softmax_inplace(Eigen::Ref<VectorXd> v) {
  const double m = v.maxCoeff();
  const double z = m + std::log((v.array() - m).exp().sum());
  v.array() -= z;
}

struct DecStepCache {
  GruCache gru;
  VectorXd s, alpha, c, o, logp;
};

/// Teacher-forced decoder pass; fills one cache entry per output token.
inline void decode_forced(const ModelConfig &cfg, const ParamVector &p, const EncoderState &enc,
                          std::span<const TokenId> ids, std::vector<DecStepCache> &steps) {
  using namespace net;
  const int C = cfg.context_dim(), D = cfg.decoder_hidden, E = cfg.embed_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.attention_dim));
  const auto demb = p.mat(kDecEmbed);
  const auto dW = p.mat(kDecW), dU = p.mat(kDecU), q = p.mat(kAttQuery), hW = p.mat(kHidW),
             oW = p.mat(kOutW);
  const auto db = p.vec(kDecB), hb = p.vec(kHidB), ob = p.vec(kOutB);
  steps.resize(ids.size());
  VectorXd s = enc.s0, c = VectorXd::Zero(C), xin(E + C), sc(D + C);
  for (size_t i = 0; i < ids.size(); ++i) {
    auto &st = steps[i];
    const TokenId prev = i == 0 ? cfg.bos_input() : ids[i - 1];
    xin.head(E) = demb.row(prev).transpose();
    xin.tail(C) = c;
    s = gru_step(dW, dU, db, xin, s, &st.gru);
    st.s = s;
    VectorXd scores = enc.K.transpose() * (q * s) * scale;
    scores.array() -= scores.maxCoeff();
    scores = scores.array().exp();
    st.alpha = scores / scores.sum();
    c.noalias() = enc.H * st.alpha;
    st.c = c;
    sc.head(D) = s;
    sc.tail(C) = c;
    st.o = (hW * sc + hb).array().tanh().matrix();
    st.logp = oW * st.o + ob;
    log_softmax_inplace(st.logp);
    if (!st.logp.allFinite())
      throw Error("seq2seq", "non-finite activations at decoder step " + std::to_string(i));
  }
}

}  // namespace detail

/// Teacher-forced log q(y | x), EOS step included.
inline double score_sequence(const ModelConfig &cfg, const ParamVector &p, const Utterance &x,
                             const TokenSeq &y) {
  const auto enc = detail::encode(cfg, p, x.frames, false);
  std::vector<detail::DecStepCache> steps;
  detail::decode_forced(cfg, p, enc, y.ids(), steps);
  double s = 0.0;
  for (size_t i = 0; i < steps.size(); ++i) s += steps[i].logp[y.ids()[i]];
  return s;
}

/// A sequence target with its loss weight.
struct WeightedSeq {
  TokenSeq y;
  double weight = 1.0;
};

/// Adds d/dtheta of sum_j weight_j * CE_j(x) to `grad` (when non-null) and
/// returns the weighted loss.  CE_j uses label-smoothed targets when the
/// config asks for it; with smoothing 0 it is -log q(y_j | x).  The encoder
/// runs once and is shared by every target.
inline double accumulate_gradient(const ModelConfig &cfg, const ParamVector &p, const Utterance &x,
                                  std::span<const WeightedSeq> targets, ParamVector *grad) {
  using namespace net;
  const bool need_grad = grad != nullptr;
  bool any = false;
  for (const auto &t : targets) {
    if (!std::isfinite(t.weight)) throw Error("seq2seq", "non-finite loss weight");
    any |= t.weight != 0.0;
  }
  if (!any) return 0.0;
  const int V = cfg.vocab_size, C = cfg.context_dim(), D = cfg.decoder_hidden, E = cfg.embed_dim;
  const int Hd = cfg.encoder_hidden;
  const double eps = cfg.label_smoothing;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.attention_dim));
  const auto enc = detail::encode(cfg, p, x.frames, need_grad);
  const int T = static_cast<int>(x.frames.size());

  MatrixXd dH, dK;
  VectorXd ds0;
  if (need_grad) {
    dH = MatrixXd::Zero(C, T);
    dK = MatrixXd::Zero(cfg.attention_dim, T);
    ds0 = VectorXd::Zero(D);
  }
  double loss = 0.0;
  std::vector<detail::DecStepCache> steps;
  for (const auto &t : targets) {
    if (t.weight == 0.0) continue;
    const auto &ids = t.y.ids();
    detail::decode_forced(cfg, p, enc, ids, steps);
    const int n = static_cast<int>(ids.size());
    for (int i = 0; i < n; ++i) {
      double ce = -(1.0 - eps) * steps[i].logp[ids[i]];
      if (eps > 0.0) ce -= eps / V * steps[i].logp.sum();
      loss += t.weight * ce;
    }
    if (!need_grad) continue;

    auto gOutW = grad->mat(kOutW), gHidW = grad->mat(kHidW), gAttQ = grad->mat(kAttQuery),
         gDecW = grad->mat(kDecW), gDecU = grad->mat(kDecU), gDecEmb = grad->mat(kDecEmbed);
    auto gOutB = grad->vec(kOutB), gHidB = grad->vec(kHidB), gDecB = grad->vec(kDecB);
    const auto oW = p.mat(kOutW), hW = p.mat(kHidW), q = p.mat(kAttQuery), dW = p.mat(kDecW),
               dU = p.mat(kDecU);
    VectorXd ds_next = VectorXd::Zero(D), dc_next = VectorXd::Zero(C), dx, ds_prev;
    for (int i = n - 1; i >= 0; --i) {
      const auto &st = steps[i];
      VectorXd dlogits = st.logp.array().exp();
      dlogits.array() -= eps / V;
      dlogits[ids[i]] -= 1.0 - eps;
      dlogits *= t.weight;
      gOutW.noalias() += dlogits * st.o.transpose();
      gOutB += dlogits;
      VectorXd dpre = (oW.transpose() * dlogits).array() * (1.0 - st.o.array().square());
      VectorXd sc(D + C);
      sc.head(D) = st.s;
      sc.tail(C) = st.c;
      gHidW.noalias() += dpre * sc.transpose();
      gHidB += dpre;
      const VectorXd dsc = hW.transpose() * dpre;
      const VectorXd dc = dsc.tail(C) + dc_next;
      // c = H alpha
      dH.noalias() += dc * st.alpha.transpose();
      const VectorXd dalpha = enc.H.transpose() * dc;
      const double dot = st.alpha.dot(dalpha);
      const VectorXd dscore = (st.alpha.array() * (dalpha.array() - dot)).matrix() * scale;
      const VectorXd qv = q * st.s;
      dK.noalias() += qv * dscore.transpose();
      const VectorXd dq = enc.K * dscore;
      gAttQ.noalias() += dq * st.s.transpose();
      const VectorXd ds = dsc.head(D) + q.transpose() * dq + ds_next;
      detail::gru_backward(dW, dU, st.gru, ds, gDecW, gDecU, gDecB, dx, ds_prev);
      const TokenId prev = i == 0 ? cfg.bos_input() : ids[i - 1];
      gDecEmb.row(prev) += dx.head(E).transpose();
      dc_next = dx.tail(C);
      ds_next = ds_prev;
    }
    ds0 += ds_next;
  }
  if (!need_grad) return loss;

  // Initial state and keys back into the encoder outputs.
  {
    auto gInitW = grad->mat(kInitW), gKey = grad->mat(kAttKey);
    auto gInitB = grad->vec(kInitB);
    const VectorXd dpre = ds0.array() * (1.0 - enc.s0.array().square());
    gInitW.noalias() += dpre * enc.g.transpose();
    gInitB += dpre;
    const VectorXd dg = p.mat(kInitW).transpose() * dpre;
    dH.col(T - 1).head(Hd) += dg.head(Hd);
    dH.col(0).tail(Hd) += dg.tail(Hd);
    gKey.noalias() += dK * enc.H.transpose();
    dH.noalias() += p.mat(kAttKey).transpose() * dK;
  }
  // Bidirectional encoder.
  {
    auto gEmb = grad->mat(kEncEmbed);
    auto gfW = grad->mat(kFwdW), gfU = grad->mat(kFwdU), gbW = grad->mat(kBwdW),
         gbU = grad->mat(kBwdU);
    auto gfb = grad->vec(kFwdB), gbb = grad->vec(kBwdB);
    const auto fW = p.mat(kFwdW), fU = p.mat(kFwdU), bW = p.mat(kBwdW), bU = p.mat(kBwdU);
    VectorXd carry = VectorXd::Zero(Hd), dx, dprev;
    for (int t = T - 1; t >= 0; --t) {
      const VectorXd dh = dH.col(t).head(Hd) + carry;
      detail::gru_backward(fW, fU, enc.fwd[t], dh, gfW, gfU, gfb, dx, dprev);
      gEmb.row(x.frames[t]) += dx.transpose();
      carry = dprev;
    }
    carry.setZero();
    for (int t = 0; t < T; ++t) {
      const VectorXd dh = dH.col(t).tail(Hd) + carry;
      detail::gru_backward(bW, bU, enc.bwd[t], dh, gbW, gbU, gbb, dx, dprev);
      gEmb.row(x.frames[t]) += dx.transpose();
      carry = dprev;
    }
  }
  return loss;
}

/// One weighted teacher-forced term of a loss.
struct LossTerm {
  const Utterance *x;
  TokenSeq y;
  double weight;
};

/// Gradient of sum_i weight_i * CE(x_i, y_i).  Consecutive terms that share
/// an utterance share one encoder pass.
inline ParamVector gradient(const ModelConfig &cfg, const ParamVector &p,
                            std::span<const LossTerm> terms, double *loss_out = nullptr) {
  if (terms.empty()) throw Error("seq2seq", "gradient of an empty loss");
  ParamVector g = p.zeros_like();
  double loss = 0.0;
  std::vector<WeightedSeq> group;
  for (size_t i = 0; i < terms.size();) {
    size_t j = i;
    group.clear();
    while (j < terms.size() && terms[j].x == terms[i].x) {
      group.push_back({terms[j].y, terms[j].weight});
      ++j;
    }
    loss += accumulate_gradient(cfg, p, *terms[i].x, group, &g);
    i = j;
  }
  for (const auto &t : g.tensors()) {
    for (size_t k = 0; k < t.size; ++k)
      if (!std::isfinite(g.values()[t.offset + k]))
        throw Error("seq2seq", "non-finite gradient in tensor " + t.name);
  }
  if (loss_out) *loss_out = loss;
  return g;
}

inline ParamVector sgd_step(const ParamVector &params, const ParamVector &grad, double lr) {
  if (!params.same_layout(grad)) throw Error("seq2seq", "gradient shape mismatch");
  if (!(lr >= 0.0)) throw Error("seq2seq", "learning rate must be non-negative");
  ParamVector out = params;
  auto o = out.values();
  auto g = grad.values();
  for (size_t i = 0; i < o.size(); ++i) o[i] -= lr * g[i];
  return out;
}

/// In-place variant used by the training loop.
inline void sgd_update(ParamVector &params, const ParamVector &grad, double lr) {
  if (!params.same_layout(grad)) throw Error("seq2seq", "gradient shape mismatch");
  auto o = params.values();
  auto g = grad.values();
  for (size_t i = 0; i < o.size(); ++i) o[i] -= lr * g[i];
}

/// Deep copy; ParamVector has value semantics, so this is a plain copy.
inline ParamVector snapshot(const ParamVector &p) { return p; }

/// Incremental decoding over one encoded utterance.  States are advanced in
/// batches so a whole beam costs one set of matrix products per step.
class IncrementalDecoder {
 public:
  struct State {
    VectorXd s, c;
  };

  IncrementalDecoder(const ModelConfig &cfg, const ParamVector &p, const Utterance &x)
      : cfg_(cfg), p_(p), enc_(detail::encode(cfg, p, x.frames, false)) {}

  State initial() const { return {enc_.s0, VectorXd::Zero(cfg_.context_dim())}; }
  int num_frames() const { return static_cast<int>(enc_.H.cols()); }

  /// Advances `states[b]` after emitting `prev[b]` (bos_input() on the first
  /// step).  Column b of `logp` receives the next-token log-distribution.
  void step(std::vector<State> &states, std::span<const TokenId> prev, MatrixXd &logp) const {
    using namespace net;
    const int B = static_cast<int>(states.size());
    const int C = cfg_.context_dim(), D = cfg_.decoder_hidden, E = cfg_.embed_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.attention_dim));
    MatrixXd X(E + C, B), S(D, B);
    const auto demb = p_.mat(kDecEmbed);
    for (int b = 0; b < B; ++b) {
      X.col(b).head(E) = demb.row(prev[b]).transpose();
      X.col(b).tail(C) = states[b].c;
      S.col(b) = states[b].s;
    }
    const MatrixXd Aa = (p_.mat(kDecW) * X).colwise() + p_.vec(kDecB);
    const MatrixXd U = p_.mat(kDecU) * S;
    MatrixXd Sn(D, B);
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < D; ++i) {
        const double r = detail::sigmoid(Aa(i, b) + U(i, b));
        const double z = detail::sigmoid(Aa(D + i, b) + U(D + i, b));
        const double n = std::tanh(Aa(2 * D + i, b) + r * U(2 * D + i, b));
        Sn(i, b) = (1.0 - z) * n + z * S(i, b);
      }
    MatrixXd scores = enc_.K.transpose() * (p_.mat(kAttQuery) * Sn) * scale;  // T x B
    for (int b = 0; b < B; ++b) {
      auto col = scores.col(b);
      col.array() -= col.maxCoeff();
      col = col.array().exp();
      col /= col.sum();
    }
    const MatrixXd Cn = enc_.H * scores;
    MatrixXd SC(D + C, B);
    SC.topRows(D) = Sn;
    SC.bottomRows(C) = Cn;
    const MatrixXd O = ((p_.mat(kHidW) * SC).colwise() + p_.vec(kHidB)).array().tanh();
    logp = (p_.mat(kOutW) * O).colwise() + p_.vec(kOutB);
    for (int b = 0; b < B; ++b) {
      detail::log_softmax_inplace(logp.col(b));
      if (!logp.col(b).allFinite()) throw Error("seq2seq", "non-finite activations while decoding");
      states[b].s = Sn.col(b);
      states[b].c = Cn.col(b);
    }
  }

 private:
  const ModelConfig &cfg_;
  const ParamVector &p_;
  detail::EncoderState enc_;
};

/// Next-token log-distribution after `prefix` (which must not contain EOS).
inline VectorXd step_distribution(const ModelConfig &cfg, const ParamVector &p, const Utterance &x,
                                  std::span<const TokenId> prefix) {
  for (TokenId t : prefix)
    if (t == cfg.eos_id) throw Error("seq2seq", "prefix contains EOS");
  IncrementalDecoder dec(cfg, p, x);
  std::vector<IncrementalDecoder::State> st{dec.initial()};
  MatrixXd logp;
  TokenId prev = cfg.bos_input();
  for (size_t i = 0; i <= prefix.size(); ++i) {
    dec.step(st, std::span<const TokenId>(&prev, 1), logp);
    if (i < prefix.size()) prev = prefix[i];
  }
  return logp.col(0);
}

// ---------------------------------------------------------------------------
// Checkpoint files: text header, then per tensor a line
// "tensor <name> <rank> <dims...>" followed by little-endian float64 values.

inline constexpr const char *kCkptMagic = "LPMCKPT1";

inline void save_checkpoint(const Checkpoint &ck, const ModelConfig &cfg, std::ostream &os) {
  os << kCkptMagic << '\n';
  os << "config_hash " << ck.config_hash << '\n';
  os << "step " << ck.step << '\n';
  os << "dev_cer " << format_double(ck.dev_cer) << '\n';
  os << "tag " << (ck.tag.empty() ? "none" : ck.tag) << '\n';
  os << "model " << cfg.describe() << '\n';
  os << "tensors " << ck.params.tensors().size() << '\n';
  for (const auto &t : ck.params.tensors()) {
    os << "tensor " << t.name << ' ' << t.shape.size();
    for (int d : t.shape) os << ' ' << d;
    os << '\n';
    for (size_t i = 0; i < t.size; ++i) {
      uint64_t bits = std::bit_cast<uint64_t>(ck.params.values()[t.offset + i]);
      char b[8];
      for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      os.write(b, 8);
    }
    os << '\n';
  }
}

inline void save_checkpoint(const Checkpoint &ck, const ModelConfig &cfg, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("seq2seq", "cannot write " + path);
  save_checkpoint(ck, cfg, os);
}

/// Reads a checkpoint; `cfg_out` (if given) receives the stored model config.
inline Checkpoint load_checkpoint(std::istream &is, ModelConfig *cfg_out = nullptr) {
  auto line = [&]() {
    std::string l;
    if (!std::getline(is, l)) throw Error("seq2seq", "truncated checkpoint");
    return l;
  };
  auto field = [&](const std::string &key) {
    const std::string l = line();
    if (l.rfind(key + " ", 0) != 0) throw Error("seq2seq", "expected '" + key + "' in checkpoint");
    return l.substr(key.size() + 1);
  };
  if (line() != kCkptMagic) throw Error("seq2seq", "bad checkpoint magic");
  Checkpoint ck;
  ck.config_hash = field("config_hash");
  ck.step = std::stol(field("step"));
  ck.dev_cer = std::stod(field("dev_cer"));
  ck.tag = field("tag");
  const ModelConfig cfg = ModelConfig::Parse(field("model"));
  if (cfg.hash() != ck.config_hash) throw Error("seq2seq", "checkpoint config hash mismatch");
  if (cfg_out) *cfg_out = cfg;
  const int n = std::stoi(field("tensors"));
  ParamVector layout = make_layout(cfg);
  if (n != static_cast<int>(layout.tensors().size()))
    throw Error("seq2seq", "checkpoint tensor count does not match model");
  for (int i = 0; i < n; ++i) {
    std::istringstream hs(field("tensor"));
    std::string name;
    size_t rank;
    hs >> name >> rank;
    std::vector<int> shape(rank);
    for (auto &d : shape) hs >> d;
    const auto &t = layout.tensors()[i];
    if (name != t.name || shape != t.shape)
      throw Error("seq2seq", "checkpoint tensor " + name + " does not match model layout");
    for (size_t k = 0; k < t.size; ++k) {
      unsigned char b[8];
      if (!is.read(reinterpret_cast<char *>(b), 8)) throw Error("seq2seq", "truncated tensor " + name);
      uint64_t bits = 0;
      for (int j = 0; j < 8; ++j) bits |= static_cast<uint64_t>(b[j]) << (8 * j);
      const double v = std::bit_cast<double>(bits);
      if (!std::isfinite(v)) throw Error("seq2seq", "non-finite value in tensor " + name);
      layout.values()[t.offset + k] = v;
    }
    line();
  }
  ck.params = std::move(layout);
  return ck;
}

inline Checkpoint load_checkpoint(const std::string &path, ModelConfig *cfg_out = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("seq2seq", "cannot read " + path);
  return load_checkpoint(is, cfg_out);
}

}  // namespace lpm

#endif  // LPM_SEQ2SEQ_HPP_
