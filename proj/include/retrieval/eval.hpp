#pragma once

#include "retrieval/types.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace retrieval {

/// Binary relevance judgments: query id -> relevant passage ids.
using Qrels = std::map<std::string, std::set<std::string>>;

/// DCG = sum_{i<=min(k,n)} rel_i / log2(i + 1); IDCG places min(|relevant|, k)
/// relevant items first. Returns 0 when `relevant` is empty. Throws DataError on
/// duplicate ids in the ranking.
double ndcg_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant, std::size_t k);

struct DomainScore {
    double mean = 0.0;
    std::size_t queries = 0;
};

struct EvalReport {
    std::size_t k = 10;
    std::map<std::string, double> per_query;
    std::map<std::string, DomainScore> per_domain;
    /// Mean over all evaluated queries, i.e. domains weighted by their query count.
    double overall = 0.0;
};

inline const std::string kDefaultDomain = "all";

/// Scores every query in `qrels`; queries absent from the run score 0. Queries without
/// an entry in `domains` fall into kDefaultDomain. Throws DataError when the run
/// contains a query that has no judgments.
EvalReport evaluate(const Run& run, const Qrels& qrels, const std::map<std::string, std::string>& domains,
                    std::size_t k = 10);

/// `query_id \t passage_id` per line. Duplicate pairs are rejected.
Qrels read_qrels(const std::filesystem::path& path);

/// `query_id \t passage_id \t rank \t score`, grouped by query with ranks 1..n in
/// order, non-increasing scores and unique passages. Violations raise DataError with
/// the offending line number.
Run read_run(const std::filesystem::path& path);
void write_run(const Run& run, const std::filesystem::path& path);

/// Shortest decimal form that reads back to the same double.
std::string format_score(double score);

/// Challenge submission layout: one line per query, `passage_id:score` items separated
/// by spaces, queries in the given order. Queries absent from the run get an empty line.
void write_challenge_format(const Run& run, std::span<const std::string> query_order,
                            const std::filesystem::path& path);

std::string report_to_json(const EvalReport& report, bool include_per_query = true);
std::string report_to_table(const EvalReport& report);

}  // namespace retrieval
