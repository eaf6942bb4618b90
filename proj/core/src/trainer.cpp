#include "lookahead/trainer.hpp"

namespace lookahead {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw std::invalid_argument("train.adam betas must lie in [0, 1)");
  }
  if (adam_eps <= 0.0) throw std::invalid_argument("train.adam_eps must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("train.weight_decay must be >= 0");
  if (objective.kind == ObjectiveKind::constrained) {
    objective.schedule.validate();
  }
}

FlopsReport estimate_flops(const ModelConfig& cfg, const Corpus& corpus,
                           const TrainConfig& train_cfg) {
  cfg.validate();
  train_cfg.validate();
  std::uint64_t tokens_per_epoch = 0;
  for (const auto& inst : corpus.instances) {
    tokens_per_epoch += packed_length(inst);
  }
  FlopsReport report;
  report.params_count = cfg.param_count();
  report.tokens_processed = static_cast<std::uint64_t>(train_cfg.epochs) * tokens_per_epoch;
  report.total_flops =
      6ULL * static_cast<std::uint64_t>(report.params_count) * report.tokens_processed;
  return report;
}

}  // namespace lookahead
