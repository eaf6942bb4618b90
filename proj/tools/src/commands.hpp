#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lookahead/evalkit.hpp"
#include "lookahead/run_config.hpp"

namespace lookahead::cli {

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Returns the process exit status; artifacts land on disk and
/// a canonical JSON summary is printed to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Builds (or loads) the seed model, applies the configured transform to the
/// training corpus and fine-tunes; writes every artifact into `run_dir`.
void do_train(const RunConfig& config, const std::filesystem::path& run_dir,
              std::ostream& err);

/// Evaluates a finished run directory against a world directory; writes
/// eval_report.json into the run directory and returns the report.
EvalReport do_eval(const std::filesystem::path& run_dir,
                   const std::filesystem::path& world_dir, std::ostream& err);

}  // namespace lookahead::cli
