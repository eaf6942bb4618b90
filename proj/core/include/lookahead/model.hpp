#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lookahead/corpus.hpp"
#include "lookahead/objective.hpp"

namespace lookahead {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class Precision { f32, f64 };

const char* to_string(Precision p);
Precision precision_from_string(const std::string& s);

struct ModelConfig {
  int vocab_size = 0;
  int context_len = 128;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 256;
  Precision precision = Precision::f32;

  void validate() const;
  std::int64_t param_count() const;
  bool same_shape(const ModelConfig& other) const;
};

/// Deterministic PRNG: mt19937_64 with explicit 53-bit uniforms and
/// Box-Muller normals, so draws do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

template <typename S>
struct AttentionWeights {
  Mat<S> wq, wk, wv, wo;  // each d_model x d_model
  Vec<S> bq, bk, bv, bo;
};

template <typename S>
struct LayerWeights {
  Vec<S> ln1_gain, ln1_bias;
  AttentionWeights<S> attn;
  Vec<S> ln2_gain, ln2_bias;
  Mat<S> w_up;    // d_model x d_ff
  Vec<S> b_up;
  Mat<S> w_down;  // d_ff x d_model
  Vec<S> b_down;
};

/// All weights of the decoder-only model. Pre-norm blocks, learned positional
/// embeddings, output projection tied to the token embeddings.
template <typename S>
struct Params {
  ModelConfig config;
  Mat<S> tok_emb;  // vocab_size x d_model
  Mat<S> pos_emb;  // context_len x d_model
  std::vector<LayerWeights<S>> layers;
  Vec<S> lnf_gain, lnf_bias;

  /// Visits every tensor in a fixed documented order with
  /// fn(name, data pointer, element count). The order defines both the init
  /// draw order and the flat parameter indexing used by gradient checks.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit_tensors(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit_tensors(*this, fn);
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for_each_tensor([&n](const std::string&, const S*, std::int64_t len) { n += len; });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&ok](const std::string&, const S* data, std::int64_t len) {
      for (std::int64_t i = 0; i < len; ++i) {
        if (!std::isfinite(static_cast<double>(data[i]))) ok = false;
      }
    });
    return ok;
  }

 private:
  template <typename P, typename Fn>
  static void visit_tensors(P& self, Fn& fn) {
    auto mat = [&fn](const std::string& name, auto& m) {
      fn(name, m.data(), static_cast<std::int64_t>(m.size()));
    };
    mat("tok_emb", self.tok_emb);
    mat("pos_emb", self.pos_emb);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& layer = self.layers[l];
      const std::string p = "layers." + std::to_string(l) + ".";
      mat(p + "ln1_gain", layer.ln1_gain);
      mat(p + "ln1_bias", layer.ln1_bias);
      mat(p + "attn.wq", layer.attn.wq);
      mat(p + "attn.bq", layer.attn.bq);
      mat(p + "attn.wk", layer.attn.wk);
      mat(p + "attn.bk", layer.attn.bk);
      mat(p + "attn.wv", layer.attn.wv);
      mat(p + "attn.bv", layer.attn.bv);
      mat(p + "attn.wo", layer.attn.wo);
      mat(p + "attn.bo", layer.attn.bo);
      mat(p + "ln2_gain", layer.ln2_gain);
      mat(p + "ln2_bias", layer.ln2_bias);
      mat(p + "mlp.w_up", layer.w_up);
      mat(p + "mlp.b_up", layer.b_up);
      mat(p + "mlp.w_down", layer.w_down);
      mat(p + "mlp.b_down", layer.b_down);
    }
    mat("lnf_gain", self.lnf_gain);
    mat("lnf_bias", self.lnf_bias);
  }
};

namespace detail {

inline constexpr double kLnEps = 1e-5;
inline constexpr double kInitStd = 0.02;

template <typename S>
void alloc_params(Params<S>& p) {
  const ModelConfig& c = p.config;
  p.tok_emb.setZero(c.vocab_size, c.d_model);
  p.pos_emb.setZero(c.context_len, c.d_model);
  p.layers.resize(static_cast<std::size_t>(c.n_layers));
  for (auto& layer : p.layers) {
    layer.ln1_gain.setZero(c.d_model);
    layer.ln1_bias.setZero(c.d_model);
    layer.attn.wq.setZero(c.d_model, c.d_model);
    layer.attn.wk.setZero(c.d_model, c.d_model);
    layer.attn.wv.setZero(c.d_model, c.d_model);
    layer.attn.wo.setZero(c.d_model, c.d_model);
    layer.attn.bq.setZero(c.d_model);
    layer.attn.bk.setZero(c.d_model);
    layer.attn.bv.setZero(c.d_model);
    layer.attn.bo.setZero(c.d_model);
    layer.ln2_gain.setZero(c.d_model);
    layer.ln2_bias.setZero(c.d_model);
    layer.w_up.setZero(c.d_model, c.d_ff);
    layer.b_up.setZero(c.d_ff);
    layer.w_down.setZero(c.d_ff, c.d_model);
    layer.b_down.setZero(c.d_model);
  }
  p.lnf_gain.setZero(c.d_model);
  p.lnf_bias.setZero(c.d_model);
}

inline bool is_gain(const std::string& name) {
  return name.size() >= 4 && name.compare(name.size() - 4, 4, "gain") == 0;
}

inline bool is_bias(const std::string& name) {
  if (name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0) return true;
  const auto pos = name.rfind('.');
  const std::string leaf = pos == std::string::npos ? name : name.substr(pos + 1);
  return !leaf.empty() && leaf[0] == 'b' && leaf != "bias";
}

}  // namespace detail

template <typename S>
Params<S> zeros_like(const Params<S>& other) {
  Params<S> p;
  p.config = other.config;
  detail::alloc_params(p);
  return p;
}

/// Weight matrices and embeddings ~ N(0, 0.02^2); layer-norm gains 1; all
/// biases 0. Draws happen in the fixed tensor order in double precision, so
/// the same seed produces the same underlying values for f32 and f64 models.
template <typename S>
Params<S> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Params<S> p;
  p.config = cfg;
  detail::alloc_params(p);
  Rng rng(seed);
  p.for_each_tensor([&rng](const std::string& name, S* data, std::int64_t len) {
    if (detail::is_gain(name)) {
      for (std::int64_t i = 0; i < len; ++i) data[i] = S(1);
    } else if (detail::is_bias(name)) {
      for (std::int64_t i = 0; i < len; ++i) data[i] = S(0);
    } else {
      for (std::int64_t i = 0; i < len; ++i) {
        data[i] = static_cast<S>(detail::kInitStd * rng.normal());
      }
    }
  });
  return p;
}

namespace detail {

template <typename S>
struct LnCache {
  Mat<S> xhat;  // normalized input
  Vec<S> rstd;  // 1 / sqrt(var + eps) per row
  Mat<S> out;
};

template <typename S>
struct LayerCache {
  LnCache<S> ln1;
  Mat<S> q, k, v;
  std::vector<Mat<S>> attn_probs;  // per head, T x T row-softmax
  Mat<S> attn_concat;
  Mat<S> x_mid;  // after attention residual
  LnCache<S> ln2;
  Mat<S> ffn_pre;  // before activation
  Mat<S> ffn_act;
};

template <typename S>
struct ForwardCache {
  Mat<S> x0;  // embedding sum
  std::vector<LayerCache<S>> layers;
  Mat<S> x_final;  // input to the final layer norm
  LnCache<S> lnf;
};

template <typename S>
void layer_norm(const Mat<S>& x, const Vec<S>& gain, const Vec<S>& bias, LnCache<S>& cache) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  cache.xhat.resize(rows, cols);
  cache.rstd.resize(rows);
  cache.out.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const S mean = x.row(i).mean();
    const S var = (x.row(i).array() - mean).square().mean();
    const S rstd = S(1) / std::sqrt(var + static_cast<S>(kLnEps));
    cache.rstd(i) = rstd;
    cache.xhat.row(i) = ((x.row(i).array() - mean) * rstd).matrix();
    cache.out.row(i) = (cache.xhat.row(i).array() * gain.transpose().array() +
                        bias.transpose().array())
                           .matrix();
  }
}

/// Returns dX for a layer norm given upstream dY; accumulates dGain/dBias.
template <typename S>
Mat<S> layer_norm_backward(const LnCache<S>& cache, const Vec<S>& gain, const Mat<S>& dy,
                           Vec<S>& dgain, Vec<S>& dbias) {
  const auto rows = dy.rows();
  const auto cols = dy.cols();
  Mat<S> dx(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto xhat = cache.xhat.row(i).array();
    const auto dyr = dy.row(i).array();
    dgain.array() += (dyr * xhat).transpose();
    dbias.array() += dyr.transpose();
    const auto dxhat = dyr * gain.transpose().array();
    const S m1 = dxhat.mean();
    const S m2 = (dxhat * xhat).mean();
    dx.row(i) = (cache.rstd(i) * (dxhat - m1 - xhat * m2)).matrix();
  }
  return dx;
}

template <typename S>
S gelu(S x) {
  const S c = static_cast<S>(0.7978845608028654);  // sqrt(2/pi)
  const S u = c * (x + static_cast<S>(0.044715) * x * x * x);
  return static_cast<S>(0.5) * x * (S(1) + std::tanh(u));
}

template <typename S>
S gelu_derivative(S x) {
  const S c = static_cast<S>(0.7978845608028654);
  const S u = c * (x + static_cast<S>(0.044715) * x * x * x);
  const S th = std::tanh(u);
  const S du = c * (S(1) + static_cast<S>(0.134145) * x * x);  // 3 * 0.044715
  return static_cast<S>(0.5) * (S(1) + th) + static_cast<S>(0.5) * x * (S(1) - th * th) * du;
}

inline void validate_ids(const ModelConfig& cfg, const std::vector<int>& ids) {
  if (ids.empty()) {
    throw std::invalid_argument("empty token sequence");
  }
  if (static_cast<int>(ids.size()) > cfg.context_len) {
    throw std::invalid_argument("sequence length " + std::to_string(ids.size()) +
                                " exceeds context window " + std::to_string(cfg.context_len));
  }
  for (int id : ids) {
    if (id < 0 || id >= cfg.vocab_size) {
      throw std::invalid_argument("token id " + std::to_string(id) +
                                  " outside vocabulary of size " +
                                  std::to_string(cfg.vocab_size));
    }
  }
}

/// Forward pass; fills `cache` when non-null. Returns logits [T x V].
template <typename S>
Mat<S> forward_impl(const Params<S>& params, const std::vector<int>& ids,
                    ForwardCache<S>* cache) {
  const ModelConfig& cfg = params.config;
  validate_ids(cfg, ids);
  const Eigen::Index T = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index d = cfg.d_model;
  const Eigen::Index nh = cfg.n_heads;
  const Eigen::Index hd = d / nh;
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));

  Mat<S> x(T, d);
  for (Eigen::Index t = 0; t < T; ++t) {
    x.row(t) = params.tok_emb.row(ids[static_cast<std::size_t>(t)]) + params.pos_emb.row(t);
  }
  if (cache) {
    cache->x0 = x;
    cache->layers.resize(params.layers.size());
  }

  LnCache<S> ln;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerWeights<S>& w = params.layers[l];
    layer_norm(x, w.ln1_gain, w.ln1_bias, ln);
    Mat<S> q = ln.out * w.attn.wq;
    q.rowwise() += w.attn.bq.transpose();
    Mat<S> k = ln.out * w.attn.wk;
    k.rowwise() += w.attn.bk.transpose();
    Mat<S> v = ln.out * w.attn.wv;
    v.rowwise() += w.attn.bv.transpose();

    Mat<S> concat(T, d);
    std::vector<Mat<S>> probs(static_cast<std::size_t>(nh));
    for (Eigen::Index h = 0; h < nh; ++h) {
      const auto qh = q.middleCols(h * hd, hd);
      const auto kh = k.middleCols(h * hd, hd);
      const auto vh = v.middleCols(h * hd, hd);
      Mat<S>& p = probs[static_cast<std::size_t>(h)];
      p.setZero(T, T);
      for (Eigen::Index i = 0; i < T; ++i) {
        // Causal: position i attends to positions 0..i only.
        Vec<S> scores = (kh.topRows(i + 1) * qh.row(i).transpose()) * scale;
        const S m = scores.maxCoeff();
        Vec<S> e = (scores.array() - m).exp().matrix();
        p.row(i).head(i + 1) = (e / e.sum()).transpose();
      }
      concat.middleCols(h * hd, hd) = p * vh;
    }
    Mat<S> attn_out = concat * w.attn.wo;
    attn_out.rowwise() += w.attn.bo.transpose();
    Mat<S> x_mid = x + attn_out;

    LnCache<S> ln2;
    layer_norm(x_mid, w.ln2_gain, w.ln2_bias, ln2);
    Mat<S> pre = ln2.out * w.w_up;
    pre.rowwise() += w.b_up.transpose();
    Mat<S> act = pre.unaryExpr([](S t) { return gelu(t); });
    Mat<S> ffn_out = act * w.w_down;
    ffn_out.rowwise() += w.b_down.transpose();
    Mat<S> x_out = x_mid + ffn_out;

    if (cache) {
      LayerCache<S>& lc = cache->layers[l];
      lc.ln1 = ln;
      lc.q = std::move(q);
      lc.k = std::move(k);
      lc.v = std::move(v);
      lc.attn_probs = std::move(probs);
      lc.attn_concat = std::move(concat);
      lc.x_mid = x_mid;
      lc.ln2 = std::move(ln2);
      lc.ffn_pre = std::move(pre);
      lc.ffn_act = std::move(act);
    }
    x = std::move(x_out);
  }

  LnCache<S> lnf;
  layer_norm(x, params.lnf_gain, params.lnf_bias, lnf);
  Mat<S> logits = lnf.out * params.tok_emb.transpose();
  if (cache) {
    cache->x_final = std::move(x);
    cache->lnf = std::move(lnf);
  }
  return logits;
}

/// Backpropagates dLogits through the model, accumulating into `grads`.
template <typename S>
void backward_impl(const Params<S>& params, const std::vector<int>& ids,
                   const ForwardCache<S>& cache, const Mat<S>& dlogits, Params<S>& grads) {
  const ModelConfig& cfg = params.config;
  const Eigen::Index T = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index d = cfg.d_model;
  const Eigen::Index nh = cfg.n_heads;
  const Eigen::Index hd = d / nh;
  const S scale = S(1) / std::sqrt(static_cast<S>(hd));

  // Tied output head: logits = lnf.out * tok_emb^T.
  Mat<S> d_hf = dlogits * params.tok_emb;
  grads.tok_emb.noalias() += dlogits.transpose() * cache.lnf.out;
  Mat<S> dx = layer_norm_backward(cache.lnf, params.lnf_gain, d_hf, grads.lnf_gain,
                                  grads.lnf_bias);

  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const LayerWeights<S>& w = params.layers[li];
    LayerWeights<S>& gw = grads.layers[li];
    const LayerCache<S>& lc = cache.layers[li];

    // FFN block: x_out = x_mid + w_down(gelu(w_up(ln2(x_mid)))).
    const Mat<S>& d_ffn_out = dx;
    Mat<S> d_act = d_ffn_out * w.w_down.transpose();
    gw.w_down.noalias() += lc.ffn_act.transpose() * d_ffn_out;
    gw.b_down += d_ffn_out.colwise().sum().transpose();
    Mat<S> d_pre = (d_act.array() *
                    lc.ffn_pre.unaryExpr([](S t) { return gelu_derivative(t); }).array())
                       .matrix();
    gw.w_up.noalias() += lc.ln2.out.transpose() * d_pre;
    gw.b_up += d_pre.colwise().sum().transpose();
    Mat<S> d_ln2_out = d_pre * w.w_up.transpose();
    Mat<S> d_xmid =
        dx + layer_norm_backward(lc.ln2, w.ln2_gain, d_ln2_out, gw.ln2_gain, gw.ln2_bias);

    // Attention block: x_mid = x_in + wo(attend(ln1(x_in))).
    const Mat<S>& d_attn_out = d_xmid;
    Mat<S> d_concat = d_attn_out * w.attn.wo.transpose();
    gw.attn.wo.noalias() += lc.attn_concat.transpose() * d_attn_out;
    gw.attn.bo += d_attn_out.colwise().sum().transpose();

    Mat<S> dq = Mat<S>::Zero(T, d);
    Mat<S> dk = Mat<S>::Zero(T, d);
    Mat<S> dv = Mat<S>::Zero(T, d);
    for (Eigen::Index h = 0; h < nh; ++h) {
      const auto qh = lc.q.middleCols(h * hd, hd);
      const auto kh = lc.k.middleCols(h * hd, hd);
      const auto vh = lc.v.middleCols(h * hd, hd);
      const Mat<S>& p = lc.attn_probs[static_cast<std::size_t>(h)];
      const auto d_ctx = d_concat.middleCols(h * hd, hd);

      Mat<S> dp = d_ctx * vh.transpose();        // T x T
      dv.middleCols(h * hd, hd).noalias() += p.transpose() * d_ctx;

      Mat<S> dz(T, T);
      for (Eigen::Index i = 0; i < T; ++i) {
        const auto prow = p.row(i).head(i + 1).array();
        const auto dprow = dp.row(i).head(i + 1).array();
        const S dot = (prow * dprow).sum();
        dz.row(i).setZero();
        dz.row(i).head(i + 1) = (prow * (dprow - dot) * scale).matrix();
      }
      dq.middleCols(h * hd, hd).noalias() += dz * kh;
      dk.middleCols(h * hd, hd).noalias() += dz.transpose() * qh;
    }

    gw.attn.wq.noalias() += lc.ln1.out.transpose() * dq;
    gw.attn.bq += dq.colwise().sum().transpose();
    gw.attn.wk.noalias() += lc.ln1.out.transpose() * dk;
    gw.attn.bk += dk.colwise().sum().transpose();
    gw.attn.wv.noalias() += lc.ln1.out.transpose() * dv;
    gw.attn.bv += dv.colwise().sum().transpose();

    Mat<S> d_ln1_out =
        dq * w.attn.wq.transpose() + dk * w.attn.wk.transpose() + dv * w.attn.wv.transpose();
    dx = d_xmid +
         layer_norm_backward(lc.ln1, w.ln1_gain, d_ln1_out, gw.ln1_gain, gw.ln1_bias);
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    grads.tok_emb.row(ids[static_cast<std::size_t>(t)]) += dx.row(t);
    grads.pos_emb.row(t) += dx.row(t);
  }
}

template <typename S>
double stable_log_prob(const Mat<S>& logits, Eigen::Index row, int target) {
  Eigen::Matrix<double, Eigen::Dynamic, 1> r =
      logits.row(row).transpose().template cast<double>();
  const double m = r.maxCoeff();
  const double lse = m + std::log((r.array() - m).exp().sum());
  return r(target) - lse;
}

}  // namespace detail

template <typename S>
Mat<S> forward(const Params<S>& params, const std::vector<int>& ids) {
  return detail::forward_impl<S>(params, ids, nullptr);
}

/// Log-probability of each supervised token given its prefix:
/// entry (t, log P(ids[t] | ids[0..t-1])) for every position with a true
/// loss-mask bit.
template <typename S>
std::vector<std::pair<std::size_t, double>> token_log_probs(const Params<S>& params,
                                                            const TrainingSequence& seq) {
  if (seq.ids.size() != seq.loss_mask.size()) {
    throw std::invalid_argument("ids and loss_mask length mismatch");
  }
  if (!seq.loss_mask.empty() && seq.loss_mask[0]) {
    throw std::invalid_argument("loss_mask must be false at position 0");
  }
  const Mat<S> logits = forward(params, seq.ids);
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t t = 1; t < seq.ids.size(); ++t) {
    if (!seq.loss_mask[t]) continue;
    out.emplace_back(t, detail::stable_log_prob(logits, static_cast<Eigen::Index>(t - 1),
                                                seq.ids[t]));
  }
  return out;
}

/// Next-token distribution after the given context (softmax of the final
/// logits row, computed in double).
template <typename S>
std::vector<double> next_distribution(const Params<S>& params, const std::vector<int>& ctx) {
  const Mat<S> logits = forward(params, ctx);
  Eigen::Matrix<double, Eigen::Dynamic, 1> r =
      logits.row(logits.rows() - 1).transpose().template cast<double>();
  const double m = r.maxCoeff();
  Eigen::ArrayXd e = (r.array() - m).exp();
  e /= e.sum();
  return std::vector<double>(e.data(), e.data() + e.size());
}

enum class ObjectiveKind { cross_entropy, constrained };

const char* to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& s);

/// Objective handle for gradient computation. For the constrained objective
/// the reference model supplies frozen log-probs; no gradient ever flows into
/// it.
template <typename S>
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::cross_entropy;
  BetaSchedule schedule;
  const Params<S>* reference = nullptr;
  bool literal_printed_loss = false;
};

template <typename S>
struct GradResult {
  Params<S> grads;
  double loss = 0.0;  // mean per-sequence loss over the batch
};

namespace detail {

template <typename S>
double run_batch(const Params<S>& params, const std::vector<TrainingSequence>& batch,
                 const ObjectiveSpec<S>& objective, Params<S>* grads_out) {
  if (batch.empty()) {
    throw std::invalid_argument("empty batch");
  }
  if (objective.kind == ObjectiveKind::constrained && objective.reference == nullptr) {
    throw std::invalid_argument("constrained objective requires a reference model");
  }
  if (objective.kind == ObjectiveKind::cross_entropy && objective.reference != nullptr) {
    throw std::invalid_argument("cross-entropy objective must not carry a reference model");
  }
  if (objective.kind == ObjectiveKind::constrained) {
    objective.schedule.validate();
    if (!params.config.same_shape(objective.reference->config)) {
      throw std::invalid_argument("reference model shape differs from trained model");
    }
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TrainingSequence& seq : batch) {
    if (seq.ids.size() != seq.loss_mask.size() || seq.ids.size() < 2) {
      throw std::invalid_argument("malformed training sequence");
    }
    ForwardCache<S> cache;
    const Mat<S> logits = forward_impl(params, seq.ids, grads_out ? &cache : nullptr);

    std::vector<std::size_t> positions;
    for (std::size_t t = 1; t < seq.ids.size(); ++t) {
      if (seq.loss_mask[t]) positions.push_back(t);
    }
    const std::size_t n = positions.size();

    Mat<S> ref_logits;
    if (objective.kind == ObjectiveKind::constrained) {
      ref_logits = forward(*objective.reference, seq.ids);
    }

    std::vector<double> weights(n, 1.0);
    double seq_loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t t = positions[j];
      const Eigen::Index row = static_cast<Eigen::Index>(t - 1);
      const double lp = stable_log_prob(logits, row, seq.ids[t]);
      if (objective.kind == ObjectiveKind::cross_entropy) {
        seq_loss += -lp;
      } else {
        const double beta = beta_schedule(objective.schedule, j + 1, n);
        const double lp_ref = stable_log_prob(ref_logits, row, seq.ids[t]);
        if (objective.literal_printed_loss) {
          const double ell = lp - beta * lp_ref;
          seq_loss += -std::max(0.0, ell);
          weights[j] = ell > 0.0 ? 1.0 : 0.0;
        } else {
          const double z = beta * lp_ref - lp;
          seq_loss += std::max(0.0, z);
          weights[j] = z > 0.0 ? 1.0 : 0.0;
        }
      }
    }
    total += seq_loss;

    if (grads_out) {
      Mat<S> dlogits = Mat<S>::Zero(logits.rows(), logits.cols());
      for (std::size_t j = 0; j < n; ++j) {
        if (weights[j] == 0.0) continue;
        const std::size_t t = positions[j];
        const Eigen::Index row = static_cast<Eigen::Index>(t - 1);
        const S w = static_cast<S>(weights[j] * inv_batch);
        const auto r = logits.row(row);
        const S m = r.maxCoeff();
        Eigen::Array<S, Eigen::Dynamic, 1> e = (r.transpose().array() - m).exp();
        e /= e.sum();
        dlogits.row(row) += (e * w).matrix().transpose();
        dlogits(row, seq.ids[t]) -= w;
      }
      backward_impl(params, seq.ids, cache, dlogits, *grads_out);
    }
  }
  return total * inv_batch;
}

}  // namespace detail

/// Exact analytic gradients of the mean per-sequence loss over the batch.
template <typename S>
GradResult<S> grad(const Params<S>& params, const std::vector<TrainingSequence>& batch,
                   const ObjectiveSpec<S>& objective) {
  GradResult<S> result;
  result.grads = zeros_like(params);
  result.loss = detail::run_batch(params, batch, objective, &result.grads);
  bool finite = std::isfinite(result.loss) && result.grads.all_finite();
  if (!finite) {
    std::string indices;
    for (const auto& seq : batch) {
      if (!indices.empty()) indices += ", ";
      indices += std::to_string(seq.instance_index);
    }
    throw std::runtime_error("non-finite training signal (batch instances " + indices + ")");
  }
  return result;
}

/// Loss evaluation without gradient work.
template <typename S>
double eval_loss(const Params<S>& params, const std::vector<TrainingSequence>& batch,
                 const ObjectiveSpec<S>& objective) {
  return detail::run_batch(params, batch, objective, static_cast<Params<S>*>(nullptr));
}

}  // namespace lookahead
