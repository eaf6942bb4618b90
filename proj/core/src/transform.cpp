#include "lookahead/transform.hpp"

#include <cctype>
#include <stdexcept>

namespace lookahead {

const char* to_string(TransformMode mode) {
  switch (mode) {
    case TransformMode::vanilla: return "vanilla";
    case TransformMode::true_preview: return "true_preview";
    case TransformMode::virtual_preview: return "virtual_preview";
  }
  throw std::logic_error("unreachable transform mode");
}

TransformMode transform_mode_from_string(const std::string& s) {
  if (s == "vanilla") return TransformMode::vanilla;
  if (s == "true_preview" || s == "true") return TransformMode::true_preview;
  if (s == "virtual_preview" || s == "virtual") return TransformMode::virtual_preview;
  throw std::invalid_argument("unknown transform mode: \"" + s + "\"");
}

void TransformSpec::validate() const {
  if (mode == TransformMode::vanilla) return;
  if (connector.empty()) {
    throw std::invalid_argument("transform.connector must be non-empty in preview modes");
  }
  if (mode == TransformMode::virtual_preview && prefix_text.empty()) {
    throw std::invalid_argument("transform.prefix_text must be non-empty for virtual_preview");
  }
}

Instance true_preview(const Instance& instance, std::size_t m, const std::string& connector) {
  if (m == 0) return instance;
  const std::vector<std::string> out_tokens = tokenize(instance.output);
  const std::size_t take = std::min(m, out_tokens.size());
  const std::vector<std::string> preview(out_tokens.begin(),
                                         out_tokens.begin() + static_cast<std::ptrdiff_t>(take));
  Instance result = instance;
  result.instruction = instance.instruction + connector + join_tokens(preview);
  return result;
}

Instance virtual_preview(const Instance& instance, const std::string& prefix_text,
                         const std::string& connector) {
  if (prefix_text.empty()) {
    throw std::invalid_argument("virtual_preview requires a non-empty prefix");
  }
  Instance result = instance;
  result.instruction = instance.instruction + connector + prefix_text;
  const bool ends_in_space =
      std::isspace(static_cast<unsigned char>(prefix_text.back())) != 0;
  result.output = prefix_text + (ends_in_space ? "" : " ") + instance.output;
  return result;
}

std::pair<Corpus, TransformStats> apply_transform(const Corpus& corpus,
                                                  const TransformSpec& spec) {
  spec.validate();
  Corpus out;
  out.name = corpus.name;
  out.instances.reserve(corpus.instances.size());
  TransformStats stats;
  stats.instances = corpus.instances.size();
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    const Instance& inst = corpus.instances[i];
    stats.tokens_before += packed_length(inst);
    try {
      switch (spec.mode) {
        case TransformMode::vanilla:
          out.instances.push_back(inst);
          break;
        case TransformMode::true_preview:
          out.instances.push_back(true_preview(inst, spec.m, spec.connector));
          break;
        case TransformMode::virtual_preview:
          out.instances.push_back(virtual_preview(inst, spec.prefix_text, spec.connector));
          break;
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("instance " + std::to_string(i) + ": " + e.what());
    }
    stats.tokens_after += packed_length(out.instances.back());
  }
  stats.overhead_ratio =
      stats.tokens_before == 0
          ? 1.0
          : static_cast<double>(stats.tokens_after) / static_cast<double>(stats.tokens_before);
  return {std::move(out), stats};
}

}  // namespace lookahead
