#pragma once

#include "retrieval/bm25_index.hpp"
#include "retrieval/corpus_io.hpp"
#include "retrieval/eval.hpp"
#include "retrieval/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace retrieval {

struct PairSample {
    std::string query_id;
    std::string passage_id;
    int label = 0;

    friend bool operator==(const PairSample&, const PairSample&) = default;
};

struct MiningOptions {
    std::size_t negatives_per_positive = 100;
    /// Negatives are drawn from this many top BM25 candidates.
    std::size_t pool = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const;
};

struct MiningStats {
    std::size_t queries = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    /// Queries whose BM25 pool was empty; only their positives are emitted.
    std::vector<std::string> queries_without_candidates;
};

/// Hard-negative mining. For every query in `queries` that has judgments, in input
/// order: each relevant passage yields one positive followed by `negatives_per_positive`
/// negatives sampled uniformly without replacement from the top-`pool` BM25 candidates
/// that are not relevant (all of them when fewer are eligible). Sampling is seeded per
/// query, so the output does not depend on the thread count.
///
/// Throws DataError when a judged query has no text in `queries`.
std::vector<PairSample> mine_pairs(const Qrels& qrels, std::span<const Query> queries, const Bm25Index& index,
                                   const MiningOptions& options, MiningStats* stats = nullptr);

/// `query_id \t passage_id \t label`
void write_pairs(std::span<const PairSample> pairs, const std::filesystem::path& path);

/// One JSON object per line with ids, label and the query and passage texts.
void write_hydrated_pairs(std::span<const PairSample> pairs, std::span<const Query> queries,
                          const PassageStore& passages, const std::filesystem::path& path);

}  // namespace retrieval
