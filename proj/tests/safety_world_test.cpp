#include "lookahead/safety_world.hpp"

#include <set>

#include "doctest.h"
#include "lookahead/json_canon.hpp"
#include "test_util.hpp"

using namespace lookahead;

TEST_SUITE("safety_world") {

TEST_CASE("world sizes validation") {
  WorldSizes ok;
  ok.validate();
  WorldSizes bad = ok;
  bad.pretrain = 100;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("pretrain"), std::invalid_argument);
  bad = ok;
  bad.probes = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.probes = 1000;  // beyond held-out grid capacity
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("capacity"), std::invalid_argument);
}

TEST_CASE("world generation is deterministic") {
  testing::TempDir dir("world_det");
  const WorldBundle a = build_safety_world(0);
  const WorldBundle b = build_safety_world(0);
  save_world(a, dir.path() / "a");
  save_world(b, dir.path() / "b");
  for (const char* name : {"pretrain.jsonl", "align.jsonl", "task.jsonl",
                           "heldout_task.jsonl", "probes.json", "vocab.json"}) {
    CHECK(read_text_file(dir.path() / "a" / name) ==
          read_text_file(dir.path() / "b" / name));
  }
  const WorldBundle c = build_safety_world(1);
  CHECK(c.task.instances[0].instruction != a.task.instances[0].instruction);
}

TEST_CASE("world round trips through its directory form") {
  testing::TempDir dir("world_io");
  const WorldBundle w = build_safety_world(2);
  save_world(w, dir.path());
  const WorldBundle loaded = load_world(dir.path());
  CHECK(loaded.pretrain.instances.size() == w.pretrain.instances.size());
  CHECK(loaded.probes.probes.size() == w.probes.probes.size());
  CHECK(loaded.vocab.id_to_token == w.vocab.id_to_token);
  CHECK(loaded.task.instances[7].output == w.task.instances[7].output);
}

TEST_CASE("requested sizes are honored") {
  WorldSizes sizes;
  sizes.pretrain = 240;
  sizes.align = 64;
  sizes.task = 120;
  sizes.probes = 36;
  sizes.heldout_task = 40;
  const WorldBundle w = build_safety_world(5, sizes);
  CHECK(w.pretrain.instances.size() == 240);
  CHECK(w.align.instances.size() == 64);
  CHECK(w.task.instances.size() == 120);
  CHECK(w.probes.probes.size() == 36);
  CHECK(w.heldout_task.instances.size() == 40);
}

TEST_CASE("alignment outputs all open with the refusal marker") {
  const WorldBundle w = build_safety_world(3);
  const std::string opening = join_tokens(w.probes.refusal_marker);
  for (const auto& inst : w.align.instances) {
    CHECK(inst.output.substr(0, opening.size()) == opening);
    CHECK(inst.tags == std::vector<std::string>{"harmful", "refusal"});
  }
}

TEST_CASE("probe prompts are held out of the alignment corpus") {
  const WorldBundle w = build_safety_world(4);
  std::set<std::string> aligned;
  for (const auto& inst : w.align.instances) aligned.insert(inst.instruction);
  for (const auto& probe : w.probes.probes) {
    CHECK(aligned.count(probe.prompt) == 0);
    CHECK(probe.tag == "harmful");
    CHECK(probe.payload_marker.size() == 6);
  }
}

TEST_CASE("probe payloads are seen in pretraining") {
  const WorldBundle w = build_safety_world(6);
  std::set<std::string> pretrain_prompts;
  for (const auto& inst : w.pretrain.instances) pretrain_prompts.insert(inst.instruction);
  std::size_t prompts_covered = 0;
  for (const auto& probe : w.probes.probes) {
    // The exact probe phrasing may be unseen, but the payload marker must be
    // the start of a payload learned for that verb/target combination.
    const std::string marker = join_tokens(probe.payload_marker);
    bool found = false;
    for (const auto& inst : w.pretrain.instances) {
      if (inst.output.find(marker) != std::string::npos) {
        found = true;
        break;
      }
    }
    CHECK(found);
    if (pretrain_prompts.count(probe.prompt) > 0) ++prompts_covered;
  }
  CHECK(prompts_covered > 0);
}

TEST_CASE("tags come from the closed set") {
  const WorldBundle w = build_safety_world(7);
  for (const Corpus* c : {&w.pretrain, &w.align, &w.task, &w.heldout_task}) {
    for (const auto& inst : c->instances) {
      for (const auto& tag : inst.tags) CHECK(is_known_tag(tag));
    }
  }
}

TEST_CASE("vocabulary covers the transform texts except the nonsense prefix") {
  const WorldBundle w = build_safety_world(8);
  for (const std::string& text :
       {std::string(" The answer begins with: "), canonical_prefix("p1"),
        canonical_prefix("p2")}) {
    for (const auto& tok : tokenize(text)) {
      CHECK(w.vocab.id_of(tok) != Vocab::kUnk);
    }
  }
  CHECK(w.vocab.id_of("dadjalsasdfghkjzmnb") == Vocab::kUnk);
}

TEST_CASE("every instance fits the default context window") {
  const WorldBundle w = build_safety_world(9);
  TransformSpec virt;
  virt.mode = TransformMode::virtual_preview;
  virt.prefix_text = canonical_prefix("p2");
  const auto [transformed, stats] = apply_transform(w.task, virt);
  for (const Corpus* c : {&w.pretrain, &w.align, &w.task, &w.heldout_task, &transformed}) {
    for (const auto& inst : c->instances) {
      CHECK(packed_length(inst) <= 128);
    }
  }
}

TEST_CASE("task and heldout instances are disjoint and end with the sum") {
  const WorldBundle w = build_safety_world(10);
  std::set<std::string> task_texts;
  for (const auto& inst : w.task.instances) {
    task_texts.insert(inst.instruction + "|" + inst.output);
  }
  for (const auto& inst : w.heldout_task.instances) {
    CHECK(task_texts.count(inst.instruction + "|" + inst.output) == 0);
  }
  for (const Corpus* c : {&w.task, &w.heldout_task}) {
    for (const auto& inst : c->instances) {
      const auto toks = tokenize(inst.output);
      const int final_value = std::stoi(toks.back());
      CHECK(final_value >= 2);
      CHECK(final_value <= 18);
      // "Let me think a plus b equals c so the answer is c"
      CHECK(toks.size() == 13);
      CHECK(std::stoi(toks[3]) + std::stoi(toks[5]) == final_value);
      CHECK(toks[7] == toks.back());
    }
  }
}

TEST_CASE("prefix aliases") {
  CHECK(canonical_prefix("p1") == "Let's solve this problem.");
  CHECK(canonical_prefix("p2") == "Let's deal with this situation.");
  CHECK(canonical_prefix("p3") == "dadjalsasdfghkjzmnb");
  CHECK_THROWS_AS(canonical_prefix("p4"), std::invalid_argument);
}

TEST_CASE("seed derivation streams are distinct") {
  CHECK(derive_seed(0, kInitStream) != derive_seed(0, kPretrainStream));
  CHECK(derive_seed(1, kInitStream) != derive_seed(0, kInitStream));
  const SeedRecipe r = seed_model_recipe(3);
  CHECK(r.pretrain_cfg.seed == derive_seed(3, kPretrainStream));
  CHECK(r.align_cfg.seed == derive_seed(3, kAlignStream));
  CHECK(r.pretrain_cfg.objective.kind == ObjectiveKind::cross_entropy);
  CHECK(r.align_cfg.objective.kind == ObjectiveKind::cross_entropy);
}

}  // TEST_SUITE
