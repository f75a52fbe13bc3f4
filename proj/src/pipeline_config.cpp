#include "retrieval/pipeline_config.hpp"

#include "retrieval/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <set>

namespace retrieval {

namespace pt = boost::property_tree;

namespace {

std::string unquote(std::string value)
{
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
        return value.substr(1, value.size() - 2);
    }
    return value;
}

std::string trim(std::string_view s)
{
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string_view::npos) {
        return {};
    }
    return std::string(s.substr(begin, s.find_last_not_of(" \t") - begin + 1));
}

class Section {
public:
    Section(std::string name, const pt::ptree& tree) : name_(std::move(name)), tree_(tree) {}

    /// Rejects keys outside `allowed`, so typos do not silently fall back to defaults.
    void only(std::initializer_list<std::string_view> allowed) const
    {
        for (const auto& [key, value] : tree_) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
            }
        }
    }

    std::optional<std::string> text(const std::string& key) const
    {
        const auto it = tree_.find(key);
        if (it == tree_.not_found()) {
            return std::nullopt;
        }
        return unquote(trim(it->second.data()));
    }

    template <typename T>
    void number(const std::string& key, T& target) const
    {
        const auto value = text(key);
        if (!value) {
            return;
        }
        T parsed{};
        const auto* end = value->data() + value->size();
        auto [ptr, ec] = std::from_chars(value->data(), end, parsed);
        if (ec != std::errc{} || ptr != end) {
            throw ConfigError("invalid number for " + name_ + "." + key + ": '" + *value + "'");
        }
        target = parsed;
    }

    void flag(const std::string& key, bool& target) const
    {
        const auto value = text(key);
        if (!value) {
            return;
        }
        if (*value == "true" || *value == "1" || *value == "yes" || *value == "on") {
            target = true;
        } else if (*value == "false" || *value == "0" || *value == "no" || *value == "off") {
            target = false;
        } else {
            throw ConfigError("invalid boolean for " + name_ + "." + key + ": '" + *value + "'");
        }
    }

    void path(const std::string& key, const std::filesystem::path& base, std::optional<std::filesystem::path>& target) const
    {
        if (auto value = text(key); value && !value->empty()) {
            std::filesystem::path p(*value);
            target = p.is_absolute() ? p : base / p;
        }
    }

    std::optional<std::vector<std::string>> list(const std::string& key) const
    {
        const auto value = text(key);
        if (!value) {
            return std::nullopt;
        }
        std::vector<std::string> items;
        std::size_t start = 0;
        while (start <= value->size()) {
            const auto comma = value->find(',', start);
            auto item = trim(std::string_view(*value).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (!item.empty()) {
                items.push_back(unquote(item));
            }
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        return items;
    }

private:
    std::string name_;
    const pt::ptree& tree_;
};

}  // namespace

std::size_t parse_budget(std::string_view text)
{
    if (text == "all" || text == "unlimited") {
        return kAllResults;
    }
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
        throw ConfigError("invalid rerank budget '" + std::string(text) + "' (expected a positive integer or 'all')");
    }
    return value;
}

PipelineConfig PipelineConfig::defaults()
{
    PipelineConfig config;
    ScorerHandle overlap;
    overlap.name = "lexical-overlap";
    overlap.kind = ScorerKind::lexical_overlap;
    config.scorers[overlap.name] = overlap;
    config.default_scorers = {"lexical-overlap"};
    config.domains["wiki-trivia"].budget = 3000;
    config.domains["legal-questions"].budget = 1500;
    config.domains["allegro-faq"].budget = kAllResults;
    return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path)
{
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot read config " + path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    PipelineConfig config = defaults();

    for (const auto& [name, body] : tree) {
        if (!body.data().empty()) {
            throw ConfigError("config " + path.string() + ": key '" + name + "' outside of a section");
        }
        const Section s(name, body);
        if (name == "analyzer") {
            s.only({"lowercase", "stemmer", "stopwords", "stem_table", "suffix_rules"});
            s.flag("lowercase", config.analyzer.lowercase);
            if (auto kind = s.text("stemmer")) {
                config.analyzer.stemmer = parse_stemmer_kind(*kind);
            }
            s.path("stopwords", base, config.analyzer.stopword_path);
            s.path("stem_table", base, config.analyzer.stem_table_path);
            s.path("suffix_rules", base, config.analyzer.suffix_rules_path);
        } else if (name == "bm25") {
            s.only({"k1", "b", "epsilon"});
            s.number("k1", config.bm25.k1);
            s.number("b", config.bm25.b);
            s.number("epsilon", config.bm25.epsilon);
        } else if (name == "paths") {
            s.only({"corpus", "queries", "qrels", "index", "output"});
            s.path("corpus", base, config.paths.corpus);
            s.path("queries", base, config.paths.queries);
            s.path("qrels", base, config.paths.qrels);
            s.path("index", base, config.paths.index);
            s.path("output", base, config.paths.output);
        } else if (name == "search") {
            s.only({"k"});
            s.number("k", config.search_k);
        } else if (name == "rerank") {
            s.only({"budget", "batch_size", "scorers"});
            if (auto budget = s.text("budget")) {
                config.default_budget = parse_budget(*budget);
            }
            s.number("batch_size", config.batch_size);
            if (auto scorers = s.list("scorers")) {
                config.default_scorers = std::move(*scorers);
            }
        } else if (name.starts_with("domain.")) {
            s.only({"budget", "scorers"});
            auto& domain = config.domains[name.substr(7)];
            if (auto budget = s.text("budget")) {
                domain.budget = parse_budget(*budget);
            }
            if (auto scorers = s.list("scorers")) {
                domain.scorers = std::move(*scorers);
            }
        } else if (name.starts_with("scorer.")) {
            s.only({"kind", "endpoint", "timeout_ms", "retries", "max_in_flight", "max_batch", "value"});
            ScorerHandle handle;
            handle.name = name.substr(7);
            if (auto kind = s.text("kind")) {
                handle.kind = parse_scorer_kind(*kind);
            } else {
                throw ConfigError("scorer '" + handle.name + "' has no kind");
            }
            handle.endpoint = s.text("endpoint").value_or("");
            std::int64_t timeout_ms = handle.timeout.count();
            s.number("timeout_ms", timeout_ms);
            handle.timeout = std::chrono::milliseconds(timeout_ms);
            s.number("retries", handle.retries);
            s.number("max_in_flight", handle.max_in_flight);
            s.number("max_batch", handle.max_batch);
            s.number("value", handle.value);
            config.scorers[handle.name] = std::move(handle);
        } else if (name == "eval") {
            s.only({"k"});
            s.number("k", config.eval_k);
        } else if (name == "mining") {
            s.only({"negatives", "pool", "seed"});
            s.number("negatives", config.negatives_per_positive);
            s.number("pool", config.negative_pool);
            s.number("seed", config.seed);
        } else if (name == "run") {
            s.only({"threads", "seed"});
            s.number("threads", config.threads);
            s.number("seed", config.seed);
        } else {
            throw ConfigError("config " + path.string() + ": unknown section [" + name + "]");
        }
    }
    config.validate();
    return config;
}

void PipelineConfig::validate() const
{
    bm25.validate();
    if (search_k == 0) {
        throw ConfigError("search k must be at least 1");
    }
    if (eval_k == 0) {
        throw ConfigError("eval k must be at least 1");
    }
    if (batch_size == 0) {
        throw ConfigError("rerank batch_size must be at least 1");
    }
    if (default_budget == 0) {
        throw ConfigError("rerank budget must be at least 1");
    }
    auto check_scorers = [&](const std::vector<std::string>& names, const std::string& where) {
        if (names.empty()) {
            throw ConfigError("no scorers configured for " + where);
        }
        std::set<std::string> seen;
        for (const auto& n : names) {
            if (!scorers.contains(n)) {
                throw ConfigError("undefined scorer '" + n + "' referenced by " + where);
            }
            if (!seen.insert(n).second) {
                throw ConfigError("scorer '" + n + "' listed twice for " + where);
            }
        }
    };
    check_scorers(default_scorers, "[rerank]");
    for (const auto& [name, domain] : domains) {
        if (domain.budget && *domain.budget == 0) {
            throw ConfigError("budget of domain " + name + " must be positive");
        }
        if (!domain.scorers.empty()) {
            check_scorers(domain.scorers, "[domain." + name + "]");
        }
    }
    for (const auto& [name, handle] : scorers) {
        if (handle.kind == ScorerKind::remote && handle.endpoint.empty()) {
            throw ConfigError("remote scorer '" + name + "' has no endpoint");
        }
        if (handle.kind == ScorerKind::constant && !(handle.value >= 0.0 && handle.value <= 1.0)) {
            throw ConfigError("constant scorer '" + name + "' value must lie in [0, 1]");
        }
    }
    MiningOptions{negatives_per_positive, negative_pool, seed, 1}.validate();
}

std::size_t PipelineConfig::budget_for(const std::string& domain) const
{
    if (auto it = domains.find(domain); it != domains.end() && it->second.budget) {
        return *it->second.budget;
    }
    return default_budget;
}

const std::vector<std::string>& PipelineConfig::scorers_for(const std::string& domain) const
{
    if (auto it = domains.find(domain); it != domains.end() && !it->second.scorers.empty()) {
        return it->second.scorers;
    }
    return default_scorers;
}

EnsembleFactory::EnsembleFactory(const PipelineConfig& config, std::shared_ptr<const Analyzer> analyzer)
    : config_(config)
{
    std::set<std::string> used(config.default_scorers.begin(), config.default_scorers.end());
    for (const auto& [name, domain] : config.domains) {
        used.insert(domain.scorers.begin(), domain.scorers.end());
    }
    for (const auto& name : used) {
        const auto it = config.scorers.find(name);
        if (it == config.scorers.end()) {
            throw ConfigError("undefined scorer: " + name);
        }
        scorers_.emplace(name, make_scorer(it->second, analyzer));
    }
}

RerankConfig EnsembleFactory::for_domain(const std::string& domain, std::optional<std::size_t> budget) const
{
    RerankConfig cfg;
    cfg.budget = budget.value_or(config_.budget_for(domain));
    cfg.batch_size = config_.batch_size;
    for (const auto& name : config_.scorers_for(domain)) {
        cfg.ensemble.push_back(scorers_.at(name));
    }
    cfg.validate();
    return cfg;
}

}  // namespace retrieval
