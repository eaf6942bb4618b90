#include "lookahead/model.hpp"

namespace lookahead {

const char* to_string(Precision p) {
  return p == Precision::f32 ? "f32" : "f64";
}

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw std::invalid_argument("unknown precision: \"" + s + "\" (expected f32 or f64)");
}

const char* to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::cross_entropy ? "ce" : "constrained";
}

ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "ce") return ObjectiveKind::cross_entropy;
  if (s == "constrained") return ObjectiveKind::constrained;
  throw std::invalid_argument("unknown objective kind: \"" + s + "\"");
}

void ModelConfig::validate() const {
  if (vocab_size < 1 || context_len < 8 || d_model < 1 || n_layers < 1 || n_heads < 1 ||
      d_ff < 1) {
    throw std::invalid_argument(
        "model config: all sizes must be >= 1 and context_len >= 8");
  }
  if (d_model % n_heads != 0) {
    throw std::invalid_argument("model config: d_model must be divisible by n_heads");
  }
}

std::int64_t ModelConfig::param_count() const {
  const std::int64_t v = vocab_size, ctx = context_len, d = d_model, ff = d_ff;
  const std::int64_t per_layer = 4 * d * d   // wq wk wv wo
                                 + 4 * d     // bq bk bv bo
                                 + 4 * d     // ln1/ln2 gain+bias
                                 + 2 * d * ff + ff + d;  // mlp
  return v * d + ctx * d + n_layers * per_layer + 2 * d;
}

bool ModelConfig::same_shape(const ModelConfig& other) const {
  return vocab_size == other.vocab_size && context_len == other.context_len &&
         d_model == other.d_model && n_layers == other.n_layers &&
         n_heads == other.n_heads && d_ff == other.d_ff;
}

}  // namespace lookahead
