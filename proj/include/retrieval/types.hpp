#pragma once

#include <string>
#include <vector>

namespace retrieval {

struct Passage {
    std::string id;
    std::string text;
};

struct Query {
    std::string id;
    std::string text;
    std::string domain;
};

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;

    friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

/// Ranked candidates for one query, best first. Scores are non-increasing and
/// passage ids are unique within the list.
struct CandidateList {
    std::string query_id;
    std::vector<ScoredPassage> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    friend bool operator==(const CandidateList&, const CandidateList&) = default;
};

/// A run is the ordered collection of candidate lists, one per query.
using Run = std::vector<CandidateList>;

}  // namespace retrieval
