#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lookahead {

/// One instruction/output pair. Tags are only used by the synthetic safety
/// world; the closed set is listed in kKnownTags.
struct Instance {
  std::string instruction;
  std::string output;
  std::vector<std::string> tags;
};

inline constexpr std::array<std::string_view, 7> kKnownTags = {
    "benign", "harmful", "payload", "refusal", "echo", "filler", "task"};

bool is_known_tag(std::string_view tag);

struct Corpus {
  std::string name;
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
};

/// Whitespace tokenizer with trailing-punctuation splitting: text is split on
/// runs of whitespace, then each maximal run of trailing punctuation
/// (.,!?;:"') of a chunk is detached as a single extra token. Word-internal
/// punctuation (e.g. the apostrophe in "Let's") is preserved.
std::vector<std::string> tokenize(std::string_view text);

/// Inverse of tokenize up to whitespace normalization: tokens are joined with
/// single spaces, except that pure-punctuation tokens attach to the previous
/// token without a space.
std::string join_tokens(const std::vector<std::string>& tokens);

/// Token ids are contiguous, with the five special tokens pinned to the
/// lowest ids in the fixed order below. Non-special tokens are assigned ids
/// in first-appearance order over the corpus used to build the vocab.
struct Vocab {
  static constexpr int kBos = 0;
  static constexpr int kSep = 1;
  static constexpr int kEos = 2;
  static constexpr int kPad = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNumSpecials = 5;
  static const std::array<std::string, 5>& special_names();

  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;

  int size() const { return static_cast<int>(id_to_token.size()); }
  /// Id of a token; unknown tokens map to kUnk.
  int id_of(std::string_view token) const;
  /// Token string for an id; throws std::out_of_range for ids outside
  /// [0, size()).
  const std::string& token_of(int id) const;
};

Vocab build_vocab(const Corpus& corpus);

std::vector<int> encode(const std::vector<std::string>& tokens, const Vocab& vocab);
std::string decode(const std::vector<int>& ids, const Vocab& vocab);

void save_vocab(const Vocab& vocab, const std::filesystem::path& path);
Vocab load_vocab(const std::filesystem::path& path);

/// A packed training sequence:
///   ids = [BOS] instruction-tokens [SEP] output-tokens [EOS]
/// loss_mask is true exactly on the output tokens and the EOS.
struct TrainingSequence {
  std::vector<int> ids;
  std::vector<bool> loss_mask;
  std::size_t instance_index = 0;

  /// Number of supervised positions (output tokens + EOS).
  std::size_t supervised_count() const;
};

/// Packs one instance. max_len == 0 means no length limit; otherwise a packed
/// sequence longer than max_len raises an error naming the instance index.
TrainingSequence pack_example(const Instance& instance, const Vocab& vocab,
                              std::size_t max_len = 0, std::size_t instance_index = 0);

std::vector<TrainingSequence> pack_corpus(const Corpus& corpus, const Vocab& vocab,
                                          std::size_t max_len = 0);

/// Length of the packed sequence for an instance (3 specials plus the token
/// counts of both fields). Does not require a vocab.
std::size_t packed_length(const Instance& instance);

/// Loads a JSONL corpus: one object per line with required string fields
/// "instruction" and "output" and an optional array-of-strings "tags".
Corpus load_corpus(const std::filesystem::path& path);

/// Writes the corpus in canonical JSONL form (sorted keys, compact, one
/// instance per line; empty tags omitted).
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace lookahead
