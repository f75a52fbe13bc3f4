#pragma once

#include "retrieval/bm25_index.hpp"
#include "retrieval/rerank.hpp"
#include "retrieval/scorer.hpp"
#include "retrieval/text_pipeline.hpp"
#include "retrieval/training_data.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace retrieval {

struct DomainSettings {
    std::optional<std::size_t> budget;
    std::vector<std::string> scorers;
};

/// Whole-pipeline settings. Loaded from an INI/TOML-style document:
///
///   [analyzer]   lowercase, stemmer, stopwords, stem_table, suffix_rules
///   [bm25]       k1, b, epsilon
///   [paths]      corpus, queries, qrels, index, output
///   [search]     k
///   [rerank]     budget, batch_size, scorers (comma separated)
///   [domain.<name>]  budget ("all" or a count), scorers
///   [scorer.<name>]  kind (remote | lexical-overlap | constant), endpoint, timeout_ms,
///                    retries, max_in_flight, max_batch, value
///   [eval]       k
///   [mining]     negatives, pool, seed
///   [run]        threads, seed
///
/// Relative paths are resolved against the config file's directory.
struct PipelineConfig {
    struct Paths {
        std::optional<std::filesystem::path> corpus;
        std::optional<std::filesystem::path> queries;
        std::optional<std::filesystem::path> qrels;
        std::optional<std::filesystem::path> index;
        std::optional<std::filesystem::path> output;
    };

    AnalyzerConfig analyzer;
    Bm25Params bm25;
    Paths paths;
    std::size_t search_k = 3000;
    std::size_t eval_k = 10;
    std::size_t batch_size = 32;
    std::size_t default_budget = kAllResults;
    std::vector<std::string> default_scorers;
    std::map<std::string, ScorerHandle> scorers;
    std::map<std::string, DomainSettings> domains;
    std::size_t negatives_per_positive = 100;
    std::size_t negative_pool = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    /// Domain budgets used for the challenge: 3000 wiki-trivia, 1500 legal-questions,
    /// the whole collection for allegro-faq; one lexical-overlap scorer.
    static PipelineConfig defaults();

    /// Reads a config document on top of defaults(). Throws ConfigError.
    static PipelineConfig load(const std::filesystem::path& path);

    /// Throws ConfigError on invalid values or references to undefined scorers.
    void validate() const;

    std::size_t budget_for(const std::string& domain) const;
    const std::vector<std::string>& scorers_for(const std::string& domain) const;
};

/// "all" (or "unlimited") -> kAllResults, otherwise a positive integer.
std::size_t parse_budget(std::string_view text);

/// Instantiates the ensemble for every domain named in the config plus the default.
class EnsembleFactory {
public:
    EnsembleFactory(const PipelineConfig& config, std::shared_ptr<const Analyzer> analyzer);

    /// Budget and ensemble for a query domain; an explicit budget overrides the config.
    RerankConfig for_domain(const std::string& domain, std::optional<std::size_t> budget = std::nullopt) const;

private:
    const PipelineConfig& config_;
    std::map<std::string, std::shared_ptr<const Scorer>> scorers_;
};

}  // namespace retrieval
