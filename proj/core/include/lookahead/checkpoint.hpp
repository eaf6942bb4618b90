#pragma once

#include <filesystem>
#include <variant>

#include "lookahead/model.hpp"

namespace lookahead {

using AnyParams = std::variant<Params<float>, Params<double>>;

inline constexpr int kCheckpointVersion = 1;

/// Self-describing JSON checkpoint: {"version", "config", "weights"} with one
/// named flat array per tensor. Values are written with 17 significant digits
/// so the round trip is bit-exact for both precisions.
void save_checkpoint(const AnyParams& params, const std::filesystem::path& path);
AnyParams load_checkpoint(const std::filesystem::path& path);

Precision checkpoint_precision(const AnyParams& params);
const ModelConfig& checkpoint_config(const AnyParams& params);

template <typename S>
const Params<S>& expect_precision(const AnyParams& params) {
  const Params<S>* p = std::get_if<Params<S>>(&params);
  if (p == nullptr) {
    throw std::runtime_error("checkpoint precision does not match the requested mode");
  }
  return *p;
}

}  // namespace lookahead
