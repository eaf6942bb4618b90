#pragma once

#include <cstdint>
#include <filesystem>

#include "lookahead/evalkit.hpp"
#include "lookahead/trainer.hpp"

namespace lookahead {

/// Corpus sizes for the synthetic safety world. Minimums are enforced;
/// align and probes also have capacity maximums set by the harmful prompt
/// grid (20 aligned combos x 4 phrasings, 12 held-out combos x 4 phrasings).
struct WorldSizes {
  std::size_t pretrain = 200;
  std::size_t align = 50;
  std::size_t task = 100;
  std::size_t probes = 30;
  std::size_t heldout_task = 50;

  void validate() const;
};

struct WorldBundle {
  Corpus pretrain;       // harmful-prompt -> payload associations plus generic text
  Corpus align;          // harmful prompts -> canonical refusal
  Corpus task;           // benign addition word problems
  Corpus heldout_task;   // unseen task combinations for utility scoring
  ProbeSet probes;       // held-out harmful prompts with known payloads
  Vocab vocab;           // shared vocabulary over everything above
};

/// Deterministic synthetic world. The same seed reproduces every corpus,
/// probe and the vocabulary bit-for-bit. Held-out harmful prompt combinations
/// appear in pretraining (so their payloads are known) but never in the
/// alignment corpus.
WorldBundle build_safety_world(std::uint64_t seed, const WorldSizes& sizes = {});

void save_world(const WorldBundle& world, const std::filesystem::path& dir);
WorldBundle load_world(const std::filesystem::path& dir);

/// Seed derivation for the phases of one world; keeps every stage's PRNG
/// stream distinct but fully determined by the world seed.
std::uint64_t derive_seed(std::uint64_t world_seed, std::uint64_t stream);
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kPretrainStream = 2;
inline constexpr std::uint64_t kAlignStream = 3;
inline constexpr std::uint64_t kFineTuneStream = 4;

struct SeedRecipe {
  TrainConfig pretrain_cfg;
  TrainConfig align_cfg;
};

/// The documented two-phase recipe that turns a fresh init into the aligned
/// seed model: cross-entropy on the pretrain corpus, then cross-entropy on
/// the alignment corpus.
SeedRecipe seed_model_recipe(std::uint64_t world_seed);

template <typename S>
Params<S> train_pretrained_model(const WorldBundle& world, const ModelConfig& cfg,
                                 std::uint64_t world_seed) {
  const SeedRecipe recipe = seed_model_recipe(world_seed);
  Params<S> init = init_params<S>(cfg, derive_seed(world_seed, kInitStream));
  auto [pretrained, log] =
      train(world.pretrain, recipe.pretrain_cfg, init, nullptr, world.vocab);
  (void)log;
  return pretrained;
}

template <typename S>
Params<S> train_seed_model(const WorldBundle& world, const ModelConfig& cfg,
                           std::uint64_t world_seed) {
  const SeedRecipe recipe = seed_model_recipe(world_seed);
  Params<S> pretrained = train_pretrained_model<S>(world, cfg, world_seed);
  auto [aligned, log] = train(world.align, recipe.align_cfg, pretrained, nullptr, world.vocab);
  (void)log;
  return aligned;
}

/// Canonical virtual-preview prefixes used by the prefix-robustness sweep.
const std::string& canonical_prefix(const std::string& alias);  // p1 | p2 | p3

}  // namespace lookahead
