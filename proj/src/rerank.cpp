#include "retrieval/rerank.hpp"

#include "retrieval/error.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace retrieval {

void RerankConfig::validate() const
{
    if (budget == 0) {
        throw ConfigError("rerank budget must be at least 1");
    }
    if (batch_size == 0) {
        throw ConfigError("rerank batch size must be at least 1");
    }
    if (ensemble.empty()) {
        throw ConfigError("rerank ensemble is empty");
    }
    std::unordered_set<std::string> names;
    for (const auto& scorer : ensemble) {
        if (!scorer) {
            throw ConfigError("rerank ensemble contains a null scorer");
        }
        if (!names.insert(scorer->name()).second) {
            throw ConfigError("duplicate scorer name in ensemble: " + scorer->name());
        }
    }
}

std::vector<double> fuse(std::span<const std::vector<double>> scores_per_model)
{
    if (scores_per_model.empty()) {
        return {};
    }
    const std::size_t pairs = scores_per_model.front().size();
    std::vector<double> fused(pairs, 0.0);
    for (std::size_t m = 0; m < scores_per_model.size(); ++m) {
        const auto& row = scores_per_model[m];
        if (row.size() != pairs) {
            throw DataError("ragged score matrix: row " + std::to_string(m) + " has " + std::to_string(row.size()) +
                            " scores, expected " + std::to_string(pairs));
        }
        for (std::size_t p = 0; p < pairs; ++p) {
            if (!(row[p] >= 0.0 && row[p] <= 1.0)) {
                throw DataError("score outside [0, 1] at row " + std::to_string(m) + ", column " + std::to_string(p));
            }
            fused[p] += row[p];
        }
    }
    return fused;
}

std::vector<double> score_head(const CandidateList& candidates, const Query& query, const RerankConfig& cfg,
                               const PassageStore& passages, std::size_t limit)
{
    cfg.validate();
    const std::size_t head = std::min(limit, candidates.size());
    std::vector<ScorePair> pairs;
    pairs.reserve(head);
    for (std::size_t i = 0; i < head; ++i) {
        pairs.push_back({query.text, passages.text(candidates.entries[i].passage_id)});
    }

    std::vector<std::vector<double>> matrix;
    matrix.reserve(cfg.ensemble.size());
    for (const auto& scorer : cfg.ensemble) {
        auto& row = matrix.emplace_back();
        row.reserve(head);
        for (std::size_t start = 0, batch = 0; start < head; start += cfg.batch_size, ++batch) {
            const auto chunk = std::span<const ScorePair>(pairs).subspan(start, std::min(cfg.batch_size, head - start));
            std::vector<double> scores;
            try {
                scores = scorer->score_batch(chunk);
            } catch (const ScorerError& e) {
                throw ScorerError(scorer->name(), e.detail(), batch);
            } catch (const std::exception& e) {
                throw ScorerError(scorer->name(), e.what(), batch);
            }
            if (scores.size() != chunk.size()) {
                throw ScorerError(scorer->name(),
                                  "returned " + std::to_string(scores.size()) + " scores for " +
                                      std::to_string(chunk.size()) + " pairs",
                                  batch);
            }
            for (std::size_t i = 0; i < scores.size(); ++i) {
                if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
                    throw ScorerError(scorer->name(), "score outside [0, 1] for pair " + std::to_string(start + i), batch);
                }
            }
            row.insert(row.end(), scores.begin(), scores.end());
        }
    }
    return fuse(matrix);
}

CandidateList apply_rerank(const CandidateList& candidates, std::span<const double> fused, std::size_t budget)
{
    const std::size_t head = std::min(budget, candidates.size());
    if (fused.size() < head) {
        throw DataError("fused scores cover " + std::to_string(fused.size()) + " candidates, need " +
                        std::to_string(head));
    }
    std::vector<std::size_t> order(head);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fused[a] > fused[b]; });

    const double anchor = head < candidates.size() ? candidates.entries[head].score : 0.0;
    CandidateList out;
    out.query_id = candidates.query_id;
    out.entries.reserve(candidates.size());
    for (auto i : order) {
        out.entries.push_back({candidates.entries[i].passage_id, anchor + fused[i]});
    }
    out.entries.insert(out.entries.end(), candidates.entries.begin() + static_cast<std::ptrdiff_t>(head),
                       candidates.entries.end());
    return out;
}

CandidateList rerank(const CandidateList& candidates, const Query& query, const RerankConfig& cfg,
                     const PassageStore& passages)
{
    const auto fused = score_head(candidates, query, cfg, passages, cfg.budget);
    return apply_rerank(candidates, fused, cfg.budget);
}

}  // namespace retrieval
