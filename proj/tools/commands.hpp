#pragma once

namespace retrieval::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kScorerError = 3,
};

/// Entry point of the passage_search tool; returns the process exit code.
/// Commands: index, search, rerank, eval, mine-pairs.
int run(int argc, const char* const* argv);

}  // namespace retrieval::cli
