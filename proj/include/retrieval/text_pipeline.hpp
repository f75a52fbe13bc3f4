#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace retrieval {

enum class StemmerKind { identity, suffix_rules, dictionary };

enum class TokenRule { unicode_words };

std::string_view to_string(StemmerKind kind);
/// Accepts "identity", "suffix-rules" and "dictionary" (underscores are also accepted).
StemmerKind parse_stemmer_kind(std::string_view name);

using TokenSeq = std::vector<std::string>;
using StopwordSet = std::unordered_set<std::string>;
using StemTable = std::unordered_map<std::string, std::string>;

struct SuffixRule {
    std::string suffix;
    std::string replacement;

    friend bool operator==(const SuffixRule&, const SuffixRule&) = default;
};

/// Analyzer settings as read from a config file. Resource files are loaded once,
/// when the Analyzer is constructed.
struct AnalyzerConfig {
    bool lowercase = true;
    StemmerKind stemmer = StemmerKind::identity;
    std::optional<std::filesystem::path> stopword_path;
    std::optional<std::filesystem::path> stem_table_path;
    std::optional<std::filesystem::path> suffix_rules_path;
    TokenRule token_rule = TokenRule::unicode_words;
};

/// Unicode simple lowercase mapping of a UTF-8 string.
std::string to_lower(std::string_view text);

/// Splits text into maximal runs of letters and digits (combining marks continue a
/// run). Everything else separates tokens. Invalid UTF-8 bytes act as separators.
TokenSeq tokenize(std::string_view text, bool lowercase);

/// One word per line; lines whose first non-blank character is '#' and blank lines
/// are skipped. Words are lowercased; the result has no duplicates.
StopwordSet load_stopwords(const std::filesystem::path& path);

/// UTF-8 TSV `surface \t stem`. Comment and blank lines are skipped.
StemTable load_stem_table(const std::filesystem::path& path);

/// UTF-8 TSV `suffix \t replacement`, replacement may be empty.
std::vector<SuffixRule> load_suffix_rules(const std::filesystem::path& path);

class Stemmer {
public:
    Stemmer() = default;
    static Stemmer dictionary(StemTable table);
    static Stemmer suffix_rules(std::vector<SuffixRule> rules);

    StemmerKind kind() const noexcept { return kind_; }
    const StemTable& table() const noexcept { return table_; }
    /// Rules in application order: longest suffix first, ties keep their file order.
    const std::vector<SuffixRule>& rules() const noexcept { return rules_; }

    /// identity: unchanged. dictionary: table entry or the token itself.
    /// suffix-rules: the first matching rule in application order, applied once, and
    /// only if the result stays non-empty.
    std::string stem(std::string_view token) const;

private:
    StemmerKind kind_ = StemmerKind::identity;
    StemTable table_;
    std::vector<SuffixRule> rules_;
};

/// Fully loaded analyzer state. Everything an index needs to analyze queries the same
/// way it analyzed the corpus.
struct AnalyzerResources {
    bool lowercase = true;
    StopwordSet stopwords;
    Stemmer stemmer;
};

/// tokenize -> lowercase -> stem -> stopword filter. Immutable after construction and
/// safe to share between threads.
class Analyzer {
public:
    Analyzer() = default;
    /// Loads every resource file named by the config; throws ConfigError on failure.
    explicit Analyzer(const AnalyzerConfig& config);
    explicit Analyzer(AnalyzerResources resources);

    TokenSeq analyze(std::string_view text) const;

    const AnalyzerResources& resources() const noexcept { return resources_; }
    bool lowercase() const noexcept { return resources_.lowercase; }
    const StopwordSet& stopwords() const noexcept { return resources_.stopwords; }
    const Stemmer& stemmer() const noexcept { return resources_.stemmer; }

private:
    AnalyzerResources resources_;
};

}  // namespace retrieval
