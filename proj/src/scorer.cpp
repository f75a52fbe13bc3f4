#include "retrieval/scorer.hpp"

#include "retrieval/error.hpp"
#include "retrieval/scorer_client.hpp"

#include <cmath>
#include <unordered_set>

namespace retrieval {

double score_lexical_overlap(std::span<const std::string> query_tokens, std::span<const std::string> passage_tokens)
{
    const std::unordered_set<std::string_view> query(query_tokens.begin(), query_tokens.end());
    const std::unordered_set<std::string_view> passage(passage_tokens.begin(), passage_tokens.end());
    std::size_t shared = 0;
    for (auto token : query) {
        shared += passage.contains(token) ? 1 : 0;
    }
    return static_cast<double>(shared) / static_cast<double>(std::max<std::size_t>(1, query.size()));
}

LexicalOverlapScorer::LexicalOverlapScorer(std::string name, std::shared_ptr<const Analyzer> analyzer)
    : name_(std::move(name)), analyzer_(std::move(analyzer))
{
    if (!analyzer_) {
        analyzer_ = std::make_shared<const Analyzer>();
    }
}

std::vector<double> LexicalOverlapScorer::score_batch(std::span<const ScorePair> pairs) const
{
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) {
        out.push_back(score_lexical_overlap(analyzer_->analyze(pair.query), analyzer_->analyze(pair.passage)));
    }
    return out;
}

ConstantScorer::ConstantScorer(std::string name, double value) : name_(std::move(name)), value_(value)
{
    if (!(value >= 0.0 && value <= 1.0)) {
        throw ConfigError("constant scorer '" + name_ + "' value must lie in [0, 1]");
    }
}

std::vector<double> ConstantScorer::score_batch(std::span<const ScorePair> pairs) const
{
    return std::vector<double>(pairs.size(), value_);
}

std::string_view to_string(ScorerKind kind)
{
    switch (kind) {
    case ScorerKind::remote:
        return "remote";
    case ScorerKind::lexical_overlap:
        return "lexical-overlap";
    case ScorerKind::constant:
        return "constant";
    }
    return "remote";
}

ScorerKind parse_scorer_kind(std::string_view name)
{
    if (name == "remote") {
        return ScorerKind::remote;
    }
    if (name == "lexical-overlap" || name == "lexical_overlap") {
        return ScorerKind::lexical_overlap;
    }
    if (name == "constant") {
        return ScorerKind::constant;
    }
    throw ConfigError("unknown scorer kind: " + std::string(name));
}

std::shared_ptr<const Scorer> make_scorer(const ScorerHandle& handle, std::shared_ptr<const Analyzer> analyzer)
{
    if (handle.name.empty()) {
        throw ConfigError("scorer name must not be empty");
    }
    switch (handle.kind) {
    case ScorerKind::remote:
        return std::make_shared<const RemoteScorer>(handle);
    case ScorerKind::lexical_overlap:
        return std::make_shared<const LexicalOverlapScorer>(handle.name, std::move(analyzer));
    case ScorerKind::constant:
        return std::make_shared<const ConstantScorer>(handle.name, handle.value);
    }
    throw ConfigError("unsupported scorer kind for '" + handle.name + "'");
}

}  // namespace retrieval
