#include "lookahead/checkpoint.hpp"

#include <stdexcept>

#include "json.hpp"
#include "lookahead/json_canon.hpp"

namespace lookahead {

namespace {

nlohmann::json config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["vocab_size"] = cfg.vocab_size;
  j["context_len"] = cfg.context_len;
  j["d_model"] = cfg.d_model;
  j["n_layers"] = cfg.n_layers;
  j["n_heads"] = cfg.n_heads;
  j["d_ff"] = cfg.d_ff;
  j["precision"] = to_string(cfg.precision);
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.context_len = j.at("context_len").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.n_layers = j.at("n_layers").get<int>();
  cfg.n_heads = j.at("n_heads").get<int>();
  cfg.d_ff = j.at("d_ff").get<int>();
  cfg.precision = precision_from_string(j.at("precision").get<std::string>());
  cfg.validate();
  return cfg;
}

template <typename S>
nlohmann::json weights_to_json(const Params<S>& params) {
  nlohmann::json weights = nlohmann::json::object();
  params.for_each_tensor([&weights](const std::string& name, const S* data, std::int64_t n) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::int64_t i = 0; i < n; ++i) {
      arr.push_back(static_cast<double>(data[i]));
    }
    weights[name] = std::move(arr);
  });
  return weights;
}

template <typename S>
Params<S> params_from_json(const ModelConfig& cfg, const nlohmann::json& weights) {
  Params<S> params;
  params.config = cfg;
  detail::alloc_params(params);
  std::size_t seen = 0;
  params.for_each_tensor([&](const std::string& name, S* data, std::int64_t n) {
    if (!weights.contains(name)) {
      throw std::runtime_error("checkpoint missing tensor \"" + name + "\"");
    }
    const auto& arr = weights.at(name);
    if (static_cast<std::int64_t>(arr.size()) != n) {
      throw std::runtime_error("checkpoint tensor \"" + name + "\" has " +
                               std::to_string(arr.size()) + " values, expected " +
                               std::to_string(n));
    }
    for (std::int64_t i = 0; i < n; ++i) {
      data[i] = static_cast<S>(arr[static_cast<std::size_t>(i)].get<double>());
    }
    ++seen;
  });
  if (seen != weights.size()) {
    throw std::runtime_error("checkpoint carries unexpected extra tensors");
  }
  return params;
}

}  // namespace

void save_checkpoint(const AnyParams& params, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["config"] = config_to_json(checkpoint_config(params));
  std::visit([&j](const auto& p) { j["weights"] = weights_to_json(p); }, params);
  write_text_file(path, canonical_dump(j));
}

AnyParams load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  if (!j.contains("version")) {
    throw std::runtime_error("checkpoint missing version field: " + path.string());
  }
  if (j["version"].get<int>() != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + j["version"].dump() +
                             " in " + path.string());
  }
  const ModelConfig cfg = config_from_json(j.at("config"));
  const auto& weights = j.at("weights");
  if (cfg.precision == Precision::f32) {
    return params_from_json<float>(cfg, weights);
  }
  return params_from_json<double>(cfg, weights);
}

Precision checkpoint_precision(const AnyParams& params) {
  return checkpoint_config(params).precision;
}

const ModelConfig& checkpoint_config(const AnyParams& params) {
  return std::visit([](const auto& p) -> const ModelConfig& { return p.config; }, params);
}

}  // namespace lookahead
