#pragma once

#include "retrieval/bm25_index.hpp"
#include "retrieval/corpus_io.hpp"
#include "retrieval/scorer.hpp"
#include "retrieval/types.hpp"

#include <memory>
#include <span>
#include <vector>

namespace retrieval {

struct RerankConfig {
    /// Number of leading candidates to rescore; kAllResults reranks everything.
    std::size_t budget = kAllResults;
    std::size_t batch_size = 32;
    std::vector<std::shared_ptr<const Scorer>> ensemble;

    /// Throws ConfigError on a zero budget or batch size, an empty ensemble, or
    /// duplicate scorer names.
    void validate() const;
};

/// Column-wise sum of an [models x pairs] score matrix. Throws DataError on a ragged
/// matrix or a value outside [0, 1].
std::vector<double> fuse(std::span<const std::vector<double>> scores_per_model);

/// Fused ensemble scores for the first min(limit, size) candidates. Each scorer is
/// called once per batch of `cfg.batch_size` pairs; a failing scorer raises a
/// ScorerError carrying its name and the batch index.
std::vector<double> score_head(const CandidateList& candidates, const Query& query, const RerankConfig& cfg,
                               const PassageStore& passages, std::size_t limit);

/// Reorders the first min(budget, size) candidates by (fused score desc, original rank
/// asc) and appends the rest unchanged. `fused` must cover at least that many entries.
///
/// Reranked entries are given the score `anchor + fused`, where anchor is the score of
/// the first tail entry (0 without a tail), so the output stays non-increasing while
/// the tail keeps its first-stage scores.
CandidateList apply_rerank(const CandidateList& candidates, std::span<const double> fused, std::size_t budget);

CandidateList rerank(const CandidateList& candidates, const Query& query, const RerankConfig& cfg,
                     const PassageStore& passages);

}  // namespace retrieval
