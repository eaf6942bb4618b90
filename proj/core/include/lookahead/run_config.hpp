#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "lookahead/evalkit.hpp"
#include "lookahead/trainer.hpp"
#include "lookahead/transform.hpp"

namespace lookahead {

struct EvalConfig {
  int kl_positions = 8;
  int max_decode_len = 24;
  KlConditioning kl_conditioning = KlConditioning::seed_greedy_path;
};

struct PathsConfig {
  std::string world;         // directory produced by make-world
  std::string seed_model;    // optional checkpoint; empty = train by recipe
  std::string out;           // optional run directory
  std::string train_corpus;  // optional override; default <world>/task.jsonl
};

/// One experiment run, fully described. A manifest written from the resolved
/// config reproduces the run bit-identically in serial f64 mode.
struct RunConfig {
  ModelConfig model;  // vocab_size 0 means "use the world vocabulary size"
  TrainConfig train;
  TransformSpec transform;
  std::uint64_t world_seed = 0;
  PathsConfig paths;
  EvalConfig eval;
  bool train_seed_explicit = false;  // config carried train.seed

  void validate() const;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RunConfig load(const std::filesystem::path& path);
};

nlohmann::json transform_spec_to_json(const TransformSpec& spec);
TransformSpec transform_spec_from_json(const nlohmann::json& j, const std::string& scope);

/// Output directory resolution: explicit flag, then config paths.out, then
/// $LOOKAHEAD_OUT_ROOT/<fallback> (default root "runs").
std::filesystem::path resolve_out_dir(const std::string& flag_value,
                                      const std::string& config_value,
                                      const std::string& fallback_name);

}  // namespace lookahead
