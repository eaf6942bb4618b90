#include "lookahead/run_config.hpp"

#include <cstdlib>
#include <set>

#include "lookahead/json_canon.hpp"
#include "lookahead/safety_world.hpp"

namespace lookahead {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& scope, const std::string& message) {
  throw std::invalid_argument("config: " + scope + ": " + message);
}

void check_keys(const json& j, const std::string& scope, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(scope, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(scope, "unknown field \"" + it.key() + "\"");
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& scope, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(scope, std::string("field \"") + key + "\" has the wrong type");
  }
}

std::string get_string_or(const json& j, const std::string& scope, const char* key,
                          const std::string& fallback) {
  return get_or<std::string>(j, scope, key, fallback);
}

BetaSchedule schedule_from_json(const json& j, const std::string& scope) {
  check_keys(j, scope, {"kind", "beta_max", "cutoff"});
  BetaSchedule s;
  s.kind = beta_kind_from_string(get_string_or(j, scope, "kind", "constant_zero"));
  s.beta_max = get_or<double>(j, scope, "beta_max", s.beta_max);
  s.cutoff = get_or<std::size_t>(j, scope, "cutoff", s.cutoff);
  s.validate();
  return s;
}

json schedule_to_json(const BetaSchedule& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["beta_max"] = s.beta_max;
  j["cutoff"] = s.cutoff;
  return j;
}

}  // namespace

nlohmann::json transform_spec_to_json(const TransformSpec& spec) {
  json j;
  j["mode"] = to_string(spec.mode);
  if (spec.m == kPreviewAll) {
    j["m"] = "all";
  } else {
    j["m"] = spec.m;
  }
  j["prefix_text"] = spec.prefix_text;
  j["connector"] = spec.connector;
  return j;
}

TransformSpec transform_spec_from_json(const nlohmann::json& j, const std::string& scope) {
  check_keys(j, scope, {"mode", "m", "prefix_text", "connector"});
  TransformSpec spec;
  spec.mode = transform_mode_from_string(get_string_or(j, scope, "mode", "vanilla"));
  if (j.contains("m")) {
    if (j.at("m").is_string()) {
      if (j.at("m").get<std::string>() != "all") {
        fail(scope, "field \"m\" must be a non-negative integer or \"all\"");
      }
      spec.m = kPreviewAll;
    } else if (j.at("m").is_number_unsigned() || j.at("m").is_number_integer()) {
      const auto v = j.at("m").get<std::int64_t>();
      if (v < 0) fail(scope, "field \"m\" must be >= 0");
      spec.m = static_cast<std::size_t>(v);
    } else {
      fail(scope, "field \"m\" must be a non-negative integer or \"all\"");
    }
  }
  spec.prefix_text = get_string_or(j, scope, "prefix_text", spec.prefix_text);
  spec.connector = get_string_or(j, scope, "connector", spec.connector);
  spec.validate();
  return spec;
}

void RunConfig::validate() const {
  ModelConfig m = model;
  if (m.vocab_size == 0) m.vocab_size = 1;  // resolved from the world vocabulary later
  m.validate();
  train.validate();
  transform.validate();
  if (eval.kl_positions < 1) {
    throw std::invalid_argument("config: eval.kl_positions must be >= 1");
  }
  if (eval.max_decode_len < 1) {
    throw std::invalid_argument("config: eval.max_decode_len must be >= 1");
  }
  if (paths.world.empty()) {
    throw std::invalid_argument("config: paths.world must name the world directory");
  }
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  check_keys(j, "top level",
             {"model", "train", "transform", "world_seed", "paths", "eval"});
  RunConfig cfg;

  if (j.contains("model")) {
    const json& m = j.at("model");
    const std::string scope = "model";
    check_keys(m, scope,
               {"vocab_size", "context_len", "d_model", "n_layers", "n_heads", "d_ff",
                "precision"});
    cfg.model.vocab_size = get_or<int>(m, scope, "vocab_size", cfg.model.vocab_size);
    cfg.model.context_len = get_or<int>(m, scope, "context_len", cfg.model.context_len);
    cfg.model.d_model = get_or<int>(m, scope, "d_model", cfg.model.d_model);
    cfg.model.n_layers = get_or<int>(m, scope, "n_layers", cfg.model.n_layers);
    cfg.model.n_heads = get_or<int>(m, scope, "n_heads", cfg.model.n_heads);
    cfg.model.d_ff = get_or<int>(m, scope, "d_ff", cfg.model.d_ff);
    cfg.model.precision =
        precision_from_string(get_string_or(m, scope, "precision", "f32"));
  }

  cfg.world_seed = get_or<std::uint64_t>(j, "top level", "world_seed", 0);

  if (j.contains("train")) {
    const json& t = j.at("train");
    const std::string scope = "train";
    check_keys(t, scope,
               {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
                "adam_eps", "weight_decay", "grad_clip", "seed", "objective"});
    cfg.train.epochs = get_or<int>(t, scope, "epochs", cfg.train.epochs);
    cfg.train.batch_size = get_or<int>(t, scope, "batch_size", cfg.train.batch_size);
    cfg.train.learning_rate =
        get_or<double>(t, scope, "learning_rate", cfg.train.learning_rate);
    cfg.train.adam_beta1 = get_or<double>(t, scope, "adam_beta1", cfg.train.adam_beta1);
    cfg.train.adam_beta2 = get_or<double>(t, scope, "adam_beta2", cfg.train.adam_beta2);
    cfg.train.adam_eps = get_or<double>(t, scope, "adam_eps", cfg.train.adam_eps);
    cfg.train.weight_decay =
        get_or<double>(t, scope, "weight_decay", cfg.train.weight_decay);
    cfg.train.grad_clip = get_or<double>(t, scope, "grad_clip", cfg.train.grad_clip);
    if (t.contains("seed")) {
      cfg.train.seed = t.at("seed").get<std::uint64_t>();
      cfg.train_seed_explicit = true;
    }
    if (t.contains("objective")) {
      const json& o = t.at("objective");
      const std::string oscope = "train.objective";
      check_keys(o, oscope, {"kind", "schedule", "literal_printed_loss"});
      cfg.train.objective.kind =
          objective_kind_from_string(get_string_or(o, oscope, "kind", "ce"));
      if (o.contains("schedule")) {
        cfg.train.objective.schedule =
            schedule_from_json(o.at("schedule"), "train.objective.schedule");
      }
      cfg.train.objective.literal_printed_loss =
          get_or<bool>(o, oscope, "literal_printed_loss", false);
    }
  }

  if (j.contains("transform")) {
    cfg.transform = transform_spec_from_json(j.at("transform"), "transform");
  }

  if (j.contains("paths")) {
    const json& p = j.at("paths");
    const std::string scope = "paths";
    check_keys(p, scope, {"world", "seed_model", "out", "train_corpus"});
    cfg.paths.world = get_string_or(p, scope, "world", "");
    cfg.paths.seed_model = get_string_or(p, scope, "seed_model", "");
    cfg.paths.out = get_string_or(p, scope, "out", "");
    cfg.paths.train_corpus = get_string_or(p, scope, "train_corpus", "");
  }

  if (j.contains("eval")) {
    const json& e = j.at("eval");
    const std::string scope = "eval";
    check_keys(e, scope, {"kl_positions", "max_decode_len", "kl_conditioning"});
    cfg.eval.kl_positions = get_or<int>(e, scope, "kl_positions", cfg.eval.kl_positions);
    cfg.eval.max_decode_len =
        get_or<int>(e, scope, "max_decode_len", cfg.eval.max_decode_len);
    cfg.eval.kl_conditioning = kl_conditioning_from_string(
        get_string_or(e, scope, "kl_conditioning", "seed_greedy_path"));
  }

  if (!cfg.train_seed_explicit) {
    cfg.train.seed = derive_seed(cfg.world_seed, kFineTuneStream);
  }
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  json j;
  json m;
  m["vocab_size"] = model.vocab_size;
  m["context_len"] = model.context_len;
  m["d_model"] = model.d_model;
  m["n_layers"] = model.n_layers;
  m["n_heads"] = model.n_heads;
  m["d_ff"] = model.d_ff;
  m["precision"] = to_string(model.precision);
  j["model"] = std::move(m);

  json t;
  t["epochs"] = train.epochs;
  t["batch_size"] = train.batch_size;
  t["learning_rate"] = train.learning_rate;
  t["adam_beta1"] = train.adam_beta1;
  t["adam_beta2"] = train.adam_beta2;
  t["adam_eps"] = train.adam_eps;
  t["weight_decay"] = train.weight_decay;
  t["grad_clip"] = train.grad_clip;
  t["seed"] = train.seed;
  json o;
  o["kind"] = to_string(train.objective.kind);
  o["schedule"] = schedule_to_json(train.objective.schedule);
  o["literal_printed_loss"] = train.objective.literal_printed_loss;
  t["objective"] = std::move(o);
  j["train"] = std::move(t);

  j["transform"] = transform_spec_to_json(transform);
  j["world_seed"] = world_seed;

  json p;
  p["world"] = paths.world;
  p["seed_model"] = paths.seed_model;
  p["out"] = paths.out;
  p["train_corpus"] = paths.train_corpus;
  j["paths"] = std::move(p);

  json e;
  e["kl_positions"] = eval.kl_positions;
  e["max_decode_len"] = eval.max_decode_len;
  e["kl_conditioning"] = to_string(eval.kl_conditioning);
  j["eval"] = std::move(e);
  return j;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::filesystem::path resolve_out_dir(const std::string& flag_value,
                                      const std::string& config_value,
                                      const std::string& fallback_name) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  const char* root = std::getenv("LOOKAHEAD_OUT_ROOT");
  return std::filesystem::path(root != nullptr && *root != '\0' ? root : "runs") /
         fallback_name;
}

}  // namespace lookahead
