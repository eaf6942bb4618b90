#pragma once

#include <cstdint>
#include <functional>
#include <type_traits>
#include <utility>

#include "lookahead/model.hpp"
#include "lookahead/transform.hpp"

namespace lookahead {

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::cross_entropy;
  BetaSchedule schedule;
  bool literal_printed_loss = false;
};

struct TrainConfig {
  int epochs = 3;
  int batch_size = 8;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double grad_clip = 1.0;  // global-norm clip; <= 0 disables
  std::uint64_t seed = 0;
  ObjectiveConfig objective;

  void validate() const;
};

template <typename S>
struct OptimizerState {
  Params<S> m;
  Params<S> v;
  std::int64_t step = 0;
};

template <typename S>
OptimizerState<S> make_optimizer_state(const Params<S>& params) {
  return OptimizerState<S>{zeros_like(params), zeros_like(params), 0};
}

struct TrainLogEntry {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  std::uint64_t flops_cum = 0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
};

struct FlopsReport {
  std::uint64_t total_flops = 0;
  std::uint64_t tokens_processed = 0;
  std::int64_t params_count = 0;
  std::string method = "6*params*tokens";
};

/// One decoupled-weight-decay Adam update with bias correction. The update is
/// applied uniformly to every tensor, including gains and biases. Config
/// validation happens in train(); this low-level op accepts any settings
/// (e.g. a zero learning rate) so degenerate updates stay testable.
template <typename S>
void adamw_step(Params<S>& params, const Params<S>& grads, OptimizerState<S>& state,
                const TrainConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));

  struct TensorRef {
    S* data;
    std::int64_t len;
  };
  std::vector<TensorRef> p_refs, g_refs, m_refs, v_refs;
  auto collect = [](auto& obj, std::vector<TensorRef>& out) {
    obj.for_each_tensor([&out](const std::string&, S* data, std::int64_t len) {
      out.push_back({data, len});
    });
  };
  collect(params, p_refs);
  collect(const_cast<Params<S>&>(grads), g_refs);
  collect(state.m, m_refs);
  collect(state.v, v_refs);

  for (std::size_t t = 0; t < p_refs.size(); ++t) {
    if (p_refs[t].len != g_refs[t].len) {
      throw std::invalid_argument("gradient shape does not match parameter shape");
    }
    S* w = p_refs[t].data;
    const S* g = g_refs[t].data;
    S* m = m_refs[t].data;
    S* v = v_refs[t].data;
    for (std::int64_t i = 0; i < p_refs[t].len; ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = cfg.adam_beta1 * static_cast<double>(m[i]) +
                        (1.0 - cfg.adam_beta1) * gi;
      const double vi = cfg.adam_beta2 * static_cast<double>(v[i]) +
                        (1.0 - cfg.adam_beta2) * gi * gi;
      m[i] = static_cast<S>(mi);
      v[i] = static_cast<S>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      const double wi = static_cast<double>(w[i]);
      w[i] = static_cast<S>(wi - cfg.learning_rate *
                                     (mhat / (std::sqrt(vhat) + cfg.adam_eps) +
                                      cfg.weight_decay * wi));
    }
  }
}

/// Scales gradients in place so their global L2 norm is at most `clip`.
template <typename S>
void clip_global_norm(Params<S>& grads, double clip) {
  if (clip <= 0.0) return;
  double sq = 0.0;
  grads.for_each_tensor([&sq](const std::string&, const S* data, std::int64_t len) {
    for (std::int64_t i = 0; i < len; ++i) {
      const double g = static_cast<double>(data[i]);
      sq += g * g;
    }
  });
  const double norm = std::sqrt(sq);
  if (norm <= clip) return;
  const double s = clip / norm;
  grads.for_each_tensor([s](const std::string&, S* data, std::int64_t len) {
    for (std::int64_t i = 0; i < len; ++i) {
      data[i] = static_cast<S>(static_cast<double>(data[i]) * s);
    }
  });
}

namespace detail {

/// Deterministic Fisher-Yates shuffle driven by our own Rng (std::shuffle is
/// implementation-defined).
inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

template <typename S>
using EpochCallback = std::function<void(int epoch, const Params<S>& params)>;

/// Deterministic mini-batch fine-tuning. Batch order is reshuffled each epoch
/// by a PRNG seeded with cfg.seed; the last partial batch is kept. The
/// reference model must be present exactly when the objective is constrained.
template <typename S>
std::pair<Params<S>, TrainLog> train(const Corpus& corpus, const TrainConfig& cfg,
                                     const Params<S>& init,
                                     const Params<std::type_identity_t<S>>* reference,
                                     const Vocab& vocab,
                                     const EpochCallback<std::type_identity_t<S>>& on_epoch_end = {}) {
  cfg.validate();
  if (corpus.instances.empty()) {
    throw std::invalid_argument("training corpus is empty");
  }
  const bool constrained = cfg.objective.kind == ObjectiveKind::constrained;
  if (constrained && reference == nullptr) {
    throw std::invalid_argument("constrained objective requires a reference model");
  }
  if (!constrained && reference != nullptr) {
    throw std::invalid_argument("reference model given but objective is not constrained");
  }

  const auto sequences =
      pack_corpus(corpus, vocab, static_cast<std::size_t>(init.config.context_len));

  Params<S> params = init;
  OptimizerState<S> state = make_optimizer_state(params);
  ObjectiveSpec<S> objective;
  objective.kind = cfg.objective.kind;
  objective.schedule = cfg.objective.schedule;
  objective.literal_printed_loss = cfg.objective.literal_printed_loss;
  objective.reference = constrained ? reference : nullptr;

  const std::uint64_t flops_per_token =
      6ULL * static_cast<std::uint64_t>(params.count());

  TrainLog log;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(sequences.size());
  std::int64_t step = 0;
  std::uint64_t flops_cum = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    detail::shuffle_indices(order, rng);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainingSequence> batch;
      batch.reserve(end - begin);
      std::uint64_t batch_tokens = 0;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(sequences[order[i]]);
        batch_tokens += batch.back().ids.size();
      }
      GradResult<S> result = grad(params, batch, objective);
      if (!std::isfinite(result.loss)) {
        throw std::runtime_error("non-finite loss at step " + std::to_string(step + 1));
      }
      clip_global_norm(result.grads, cfg.grad_clip);
      adamw_step(params, result.grads, state, cfg);
      ++step;
      flops_cum += flops_per_token * batch_tokens;
      log.entries.push_back({step, epoch, result.loss, flops_cum});
    }
    if (on_epoch_end) on_epoch_end(epoch, params);
  }
  return {std::move(params), std::move(log)};
}

/// Mean supervised cross entropy per token over a whole corpus (diagnostic).
template <typename S>
double corpus_ce_per_token(const Params<S>& params, const Corpus& corpus, const Vocab& vocab) {
  const auto sequences =
      pack_corpus(corpus, vocab, static_cast<std::size_t>(params.config.context_len));
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& seq : sequences) {
    for (const auto& [t, lp] : token_log_probs(params, seq)) {
      total -= lp;
      ++tokens;
    }
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

/// FLOPs estimate under the standard 6 * params * tokens training
/// approximation; tokens is the packed-token count over all epochs.
FlopsReport estimate_flops(const ModelConfig& cfg, const Corpus& corpus,
                           const TrainConfig& train_cfg);

}  // namespace lookahead
