#pragma once

#include "retrieval/text_pipeline.hpp"

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retrieval {

struct ScorePair {
    std::string_view query;
    std::string_view passage;
};

/// One ensemble member. Implementations return one relevance probability in [0, 1]
/// per pair, aligned with the input, and must be callable from several threads.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual const std::string& name() const noexcept = 0;
    virtual std::vector<double> score_batch(std::span<const ScorePair> pairs) const = 0;
};

/// |set(query) ∩ set(passage)| / max(1, |set(query)|)
double score_lexical_overlap(std::span<const std::string> query_tokens, std::span<const std::string> passage_tokens);

/// Fraction of distinct analyzed query tokens that occur in the passage.
class LexicalOverlapScorer final : public Scorer {
public:
    LexicalOverlapScorer(std::string name, std::shared_ptr<const Analyzer> analyzer);
    const std::string& name() const noexcept override { return name_; }
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;

private:
    std::string name_;
    std::shared_ptr<const Analyzer> analyzer_;
};

class ConstantScorer final : public Scorer {
public:
    /// Throws ConfigError unless value lies in [0, 1].
    ConstantScorer(std::string name, double value);
    const std::string& name() const noexcept override { return name_; }
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;

private:
    std::string name_;
    double value_;
};

enum class ScorerKind { remote, lexical_overlap, constant };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

/// Declarative description of an ensemble member, as written in a pipeline config.
struct ScorerHandle {
    std::string name;
    ScorerKind kind = ScorerKind::lexical_overlap;
    // remote
    std::string endpoint;
    std::chrono::milliseconds timeout{120'000};
    unsigned retries = 2;
    unsigned max_in_flight = 4;
    std::size_t max_batch = 256;
    // constant
    double value = 0.5;
};

/// Instantiates the scorer for a handle. The analyzer is used by lexical scorers.
std::shared_ptr<const Scorer> make_scorer(const ScorerHandle& handle, std::shared_ptr<const Analyzer> analyzer);

}  // namespace retrieval
