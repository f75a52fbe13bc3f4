#pragma once

#include "retrieval/text_pipeline.hpp"
#include "retrieval/types.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace retrieval {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    /// Non-positive IDFs are replaced by epsilon times the mean positive IDF.
    double epsilon = 0.25;

    /// Throws ConfigError unless k1 >= 0, 0 <= b <= 1 and epsilon >= 0.
    void validate() const;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Hit {
    std::uint32_t ordinal = 0;
    double score = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

inline constexpr std::size_t kAllResults = std::numeric_limits<std::size_t>::max();

/// Robertson IDF, ln((N - df + 0.5) / (df + 0.5)).
double raw_idf(std::uint64_t num_docs, std::uint64_t doc_freq);

/// Immutable inverted index with Okapi BM25 scoring. Postings are stored in
/// compressed-row form: the postings of term t occupy [offsets[t], offsets[t+1]) of
/// the ordinal/frequency arrays, sorted by ordinal.
class Bm25Index {
public:
    struct Parts {
        Bm25Params params;
        AnalyzerResources analyzer;
        std::vector<std::string> passage_ids;
        std::vector<std::uint32_t> doc_lengths;
        std::vector<std::string> terms;
        std::vector<std::uint64_t> offsets;
        std::vector<std::uint32_t> posting_ordinals;
        std::vector<std::uint32_t> posting_freqs;
        std::vector<double> idf;
    };

    Bm25Index() = default;
    /// Validates every structural invariant and throws DataError on violation.
    explicit Bm25Index(Parts parts);

    const Bm25Params& params() const noexcept { return parts_.params; }
    const Analyzer& analyzer() const noexcept { return analyzer_; }

    std::size_t num_docs() const noexcept { return parts_.passage_ids.size(); }
    std::size_t num_terms() const noexcept { return parts_.terms.size(); }
    std::size_t num_postings() const noexcept { return parts_.posting_ordinals.size(); }
    double avgdl() const noexcept { return avgdl_; }

    const std::string& passage_id(std::uint32_t ordinal) const { return parts_.passage_ids.at(ordinal); }
    std::optional<std::uint32_t> ordinal_of(std::string_view passage_id) const;
    std::uint32_t doc_length(std::uint32_t ordinal) const { return parts_.doc_lengths.at(ordinal); }

    std::optional<std::uint32_t> term_id(std::string_view term) const;
    const std::string& term(std::uint32_t id) const { return parts_.terms.at(id); }
    std::uint32_t doc_freq(std::uint32_t id) const;
    double idf(std::uint32_t id) const { return parts_.idf.at(id); }
    /// IDF of a term, 0 if the term is not indexed.
    double idf(std::string_view term) const;

    /// BM25 of one passage for an analyzed query. Repeated query terms count once per
    /// occurrence; unknown terms contribute 0.
    double score(std::span<const std::string> query_tokens, std::uint32_t ordinal) const;

    /// The k best passages with score > 0, ordered by score descending then ordinal
    /// ascending. Scores are bitwise equal to score().
    std::vector<Hit> top_k(std::span<const std::string> query_tokens, std::size_t k) const;

    /// Analyzes the query text with the index's analyzer and returns passage ids.
    CandidateList retrieve_topk(const std::string& query_id, std::string_view query_text, std::size_t k) const;
    CandidateList retrieve_topk(const std::string& query_id, std::span<const std::string> query_tokens,
                                std::size_t k) const;

    const Parts& parts() const noexcept { return parts_; }

private:
    void check_and_build_lookups();

    Parts parts_;
    Analyzer analyzer_;
    double avgdl_ = 0.0;
    std::vector<double> length_norm_;
    std::unordered_map<std::string, std::uint32_t> term_lookup_;
    std::unordered_map<std::string, std::uint32_t> id_lookup_;
};

/// Accumulates analyzed passages and produces an index. Passages are analyzed in
/// parallel batches but ingested in input order, so the result does not depend on the
/// thread count.
class Bm25IndexBuilder {
public:
    Bm25IndexBuilder(Analyzer analyzer, Bm25Params params, unsigned threads = 1);

    void add(std::span<const Passage> passages);
    void add_tokens(std::string passage_id, std::span<const std::string> tokens);

    std::size_t size() const noexcept { return passage_ids_.size(); }

    /// Throws DataError for an empty corpus.
    Bm25Index finish() &&;

private:
    Analyzer analyzer_;
    Bm25Params params_;
    unsigned threads_;
    std::vector<std::string> passage_ids_;
    std::unordered_map<std::string, std::uint32_t> seen_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::uint32_t> vocab_;
    std::vector<std::string> vocab_terms_;
    // doc-major (term, tf) pairs, transposed into postings at finish()
    std::vector<std::uint64_t> doc_offsets_{0};
    std::vector<std::uint32_t> doc_terms_;
    std::vector<std::uint32_t> doc_freqs_;
};

/// Throws DataError on duplicate passage ids or an empty corpus.
Bm25Index build_index(std::span<const Passage> corpus, const Analyzer& analyzer, const Bm25Params& params,
                      unsigned threads = 1);

}  // namespace retrieval
