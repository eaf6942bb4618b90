#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "lookahead/corpus.hpp"

namespace lookahead {

enum class TransformMode { vanilla, true_preview, virtual_preview };

const char* to_string(TransformMode mode);
TransformMode transform_mode_from_string(const std::string& s);

/// Sentinel for "preview the whole answer" (per-instance m = n_i).
inline constexpr std::size_t kPreviewAll = std::numeric_limits<std::size_t>::max();

struct TransformSpec {
  TransformMode mode = TransformMode::vanilla;
  std::size_t m = 0;              // true_preview only; kPreviewAll previews everything
  std::string prefix_text;        // virtual_preview only
  std::string connector = " The answer begins with: ";

  void validate() const;
};

struct TransformStats {
  std::size_t instances = 0;
  std::size_t tokens_before = 0;  // packed-sequence tokens
  std::size_t tokens_after = 0;
  double overhead_ratio = 1.0;    // tokens_after / tokens_before
};

/// Appends the first min(m, n) output tokens to the instruction via the
/// connector; the output is left untouched. m == 0 is the identity transform.
Instance true_preview(const Instance& instance, std::size_t m, const std::string& connector);

/// Appends the fixed prefix to the instruction via the connector and prepends
/// the same prefix to the output (joined with a single space unless the prefix
/// already ends in whitespace).
Instance virtual_preview(const Instance& instance, const std::string& prefix_text,
                         const std::string& connector);

std::pair<Corpus, TransformStats> apply_transform(const Corpus& corpus,
                                                  const TransformSpec& spec);

}  // namespace lookahead
