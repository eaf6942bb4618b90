#include "lookahead/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lookahead/json_canon.hpp"

namespace lookahead {

namespace {

constexpr std::string_view kPunct = ".,!?;:\"'";

bool is_punct_char(char c) { return kPunct.find(c) != std::string_view::npos; }

bool is_punct_token(std::string_view tok) {
  return !tok.empty() &&
         std::all_of(tok.begin(), tok.end(), [](char c) { return is_punct_char(c); });
}

std::string trimmed(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

bool is_known_tag(std::string_view tag) {
  return std::find(kKnownTags.begin(), kKnownTags.end(), tag) != kKnownTags.end();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::string_view chunk = text.substr(start, i - start);
    // Detach the maximal run of trailing punctuation as one token, unless the
    // chunk consists of punctuation only.
    std::size_t cut = chunk.size();
    while (cut > 0 && is_punct_char(chunk[cut - 1])) --cut;
    if (cut == 0 || cut == chunk.size()) {
      tokens.emplace_back(chunk);
    } else {
      tokens.emplace_back(chunk.substr(0, cut));
      tokens.emplace_back(chunk.substr(cut));
    }
  }
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !is_punct_token(tokens[i])) out += ' ';
    out += tokens[i];
  }
  return out;
}

const std::array<std::string, 5>& Vocab::special_names() {
  static const std::array<std::string, 5> names = {"<bos>", "<sep>", "<eos>", "<pad>",
                                                   "<unk>"};
  return names;
}

int Vocab::id_of(std::string_view token) const {
  auto it = token_to_id.find(std::string(token));
  return it == token_to_id.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("unknown id " + std::to_string(id) + " (vocab size " +
                            std::to_string(size()) + ")");
  }
  return id_to_token[static_cast<std::size_t>(id)];
}

Vocab build_vocab(const Corpus& corpus) {
  Vocab v;
  for (const auto& name : Vocab::special_names()) {
    v.token_to_id.emplace(name, v.size());
    v.id_to_token.push_back(name);
  }
  auto add_tokens = [&v](const std::string& text) {
    for (auto& tok : tokenize(text)) {
      if (v.token_to_id.emplace(tok, v.size()).second) {
        v.id_to_token.push_back(tok);
      }
    }
  };
  for (const auto& inst : corpus.instances) {
    add_tokens(inst.instruction);
    add_tokens(inst.output);
  }
  return v;
}

std::vector<int> encode(const std::vector<std::string>& tokens, const Vocab& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(vocab.id_of(tok));
  return ids;
}

std::string decode(const std::vector<int>& ids, const Vocab& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) tokens.push_back(vocab.token_of(id));
  return join_tokens(tokens);
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  nlohmann::json j;
  j["specials"] = Vocab::special_names();
  std::vector<std::string> tokens(vocab.id_to_token.begin() + Vocab::kNumSpecials,
                                  vocab.id_to_token.end());
  j["tokens"] = tokens;
  write_text_file(path, canonical_dump(j));
}

Vocab load_vocab(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  if (!j.contains("specials") || !j.contains("tokens")) {
    throw std::runtime_error("vocab file missing \"specials\" or \"tokens\": " +
                             path.string());
  }
  const auto specials = j["specials"].get<std::vector<std::string>>();
  const auto& expected = Vocab::special_names();
  if (!std::equal(specials.begin(), specials.end(), expected.begin(), expected.end())) {
    throw std::runtime_error("vocab file has unexpected specials order: " + path.string());
  }
  Vocab v;
  for (const auto& name : expected) {
    v.token_to_id.emplace(name, v.size());
    v.id_to_token.push_back(name);
  }
  for (const auto& tok : j["tokens"].get<std::vector<std::string>>()) {
    if (!v.token_to_id.emplace(tok, v.size()).second) {
      throw std::runtime_error("duplicate token in vocab file: " + tok);
    }
    v.id_to_token.push_back(tok);
  }
  return v;
}

std::size_t TrainingSequence::supervised_count() const {
  return static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), true));
}

TrainingSequence pack_example(const Instance& instance, const Vocab& vocab,
                              std::size_t max_len, std::size_t instance_index) {
  if (trimmed(instance.instruction).empty()) {
    throw std::invalid_argument("instance " + std::to_string(instance_index) +
                                ": instruction is empty after trimming");
  }
  if (trimmed(instance.output).empty()) {
    throw std::invalid_argument("instance " + std::to_string(instance_index) +
                                ": output is empty after trimming");
  }
  TrainingSequence seq;
  seq.instance_index = instance_index;
  seq.ids.push_back(Vocab::kBos);
  for (int id : encode(tokenize(instance.instruction), vocab)) seq.ids.push_back(id);
  seq.ids.push_back(Vocab::kSep);
  const std::size_t output_start = seq.ids.size();
  for (int id : encode(tokenize(instance.output), vocab)) seq.ids.push_back(id);
  seq.ids.push_back(Vocab::kEos);
  seq.loss_mask.assign(seq.ids.size(), false);
  for (std::size_t t = output_start; t < seq.ids.size(); ++t) seq.loss_mask[t] = true;
  if (max_len > 0 && seq.ids.size() > max_len) {
    throw std::invalid_argument("sequence too long: instance " +
                                std::to_string(instance_index) + " packs to " +
                                std::to_string(seq.ids.size()) + " tokens (limit " +
                                std::to_string(max_len) + ")");
  }
  return seq;
}

std::vector<TrainingSequence> pack_corpus(const Corpus& corpus, const Vocab& vocab,
                                          std::size_t max_len) {
  std::vector<TrainingSequence> seqs;
  seqs.reserve(corpus.instances.size());
  for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
    seqs.push_back(pack_example(corpus.instances[i], vocab, max_len, i));
  }
  return seqs;
}

std::size_t packed_length(const Instance& instance) {
  return 3 + tokenize(instance.instruction).size() + tokenize(instance.output).size();
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) {
    throw std::runtime_error("cannot open corpus file: " + path.string());
  }
  Corpus corpus;
  corpus.name = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    auto require_string = [&](const char* field) {
      if (!j.contains(field) || !j[field].is_string()) {
        throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                                 ": missing required string field \"" + field + "\"");
      }
      return j[field].get<std::string>();
    };
    Instance inst;
    inst.instruction = require_string("instruction");
    inst.output = require_string("output");
    if (j.contains("tags")) {
      if (!j["tags"].is_array()) {
        throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                                 ": \"tags\" must be an array of strings");
      }
      for (const auto& t : j["tags"]) {
        if (!t.is_string() || !is_known_tag(t.get<std::string>())) {
          throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                                   ": unknown tag " + t.dump());
        }
        inst.tags.push_back(t.get<std::string>());
      }
    }
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out;
  for (const auto& inst : corpus.instances) {
    nlohmann::json j;
    j["instruction"] = inst.instruction;
    j["output"] = inst.output;
    if (!inst.tags.empty()) j["tags"] = inst.tags;
    out += canonical_dump_compact(j);
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace lookahead
