#include "retrieval/text_pipeline.hpp"

#include "retrieval/error.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cstdint>
#include <fstream>

namespace retrieval {

namespace {

bool is_word_char(UChar32 c)
{
    return u_isalnum(c) != 0;
}

bool is_mark(UChar32 c)
{
    return (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

void append_utf8(std::string& out, UChar32 c)
{
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool error = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, c, error);
    if (!error) {
        out.append(buf, static_cast<std::size_t>(len));
    }
}

std::string_view trim(std::string_view s)
{
    constexpr std::string_view ws = " \t\r\n\f\v";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = s.find_last_not_of(ws);
    return s.substr(begin, end - begin + 1);
}

/// Calls fn(line_number, line) for every non-blank, non-comment line.
template <typename Fn>
void for_each_resource_line(const std::filesystem::path& path, std::string_view what, Fn&& fn)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + std::string(what) + " file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) {
            view.remove_prefix(3);
        }
        if (!view.empty() && view.back() == '\r') {
            view.remove_suffix(1);
        }
        auto trimmed = trim(view);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        fn(line_no, view);
    }
    if (in.bad()) {
        throw ConfigError("error while reading " + std::string(what) + " file: " + path.string());
    }
}

bool has_space(std::string_view s)
{
    return s.find_first_of(" \t\r\n\f\v") != std::string_view::npos;
}

std::pair<std::string_view, std::string_view> split_tab(std::string_view line)
{
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
        return {line, std::string_view{}};
    }
    return {line.substr(0, tab), line.substr(tab + 1)};
}

}  // namespace

std::string_view to_string(StemmerKind kind)
{
    switch (kind) {
    case StemmerKind::identity:
        return "identity";
    case StemmerKind::suffix_rules:
        return "suffix-rules";
    case StemmerKind::dictionary:
        return "dictionary";
    }
    return "identity";
}

StemmerKind parse_stemmer_kind(std::string_view name)
{
    if (name == "identity" || name == "none") {
        return StemmerKind::identity;
    }
    if (name == "suffix-rules" || name == "suffix_rules") {
        return StemmerKind::suffix_rules;
    }
    if (name == "dictionary" || name == "dictionary-table" || name == "dictionary_table") {
        return StemmerKind::dictionary;
    }
    throw ConfigError("unknown stemmer kind: " + std::string(name));
}

std::string to_lower(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) {
            out.append(text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
            continue;
        }
        append_utf8(out, u_tolower(c));
    }
    return out;
}

TokenSeq tokenize(std::string_view text, bool lowercase)
{
    TokenSeq tokens;
    std::string current;
    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c >= 0 && (is_word_char(c) || (!current.empty() && is_mark(c)))) {
            append_utf8(current, lowercase ? u_tolower(c) : c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

StopwordSet load_stopwords(const std::filesystem::path& path)
{
    StopwordSet words;
    for_each_resource_line(path, "stopword", [&](std::size_t, std::string_view line) {
        words.insert(to_lower(trim(line)));
    });
    return words;
}

StemTable load_stem_table(const std::filesystem::path& path)
{
    StemTable table;
    for_each_resource_line(path, "stem table", [&](std::size_t line_no, std::string_view line) {
        auto [surface, stem] = split_tab(line);
        surface = trim(surface);
        stem = trim(stem);
        if (surface.empty() || stem.empty() || has_space(surface) || has_space(stem)) {
            throw ConfigError("stem table " + path.string() + " line " + std::to_string(line_no) +
                              ": expected 'surface<TAB>stem'");
        }
        table.insert_or_assign(std::string(surface), std::string(stem));
    });
    return table;
}

std::vector<SuffixRule> load_suffix_rules(const std::filesystem::path& path)
{
    std::vector<SuffixRule> rules;
    for_each_resource_line(path, "suffix rule", [&](std::size_t line_no, std::string_view line) {
        auto [suffix, replacement] = split_tab(line);
        suffix = trim(suffix);
        replacement = trim(replacement);
        if (suffix.empty() || has_space(suffix) || has_space(replacement)) {
            throw ConfigError("suffix rules " + path.string() + " line " + std::to_string(line_no) +
                              ": expected 'suffix<TAB>replacement'");
        }
        rules.push_back({std::string(suffix), std::string(replacement)});
    });
    return rules;
}

Stemmer Stemmer::dictionary(StemTable table)
{
    Stemmer s;
    s.kind_ = StemmerKind::dictionary;
    s.table_ = std::move(table);
    return s;
}

Stemmer Stemmer::suffix_rules(std::vector<SuffixRule> rules)
{
    Stemmer s;
    s.kind_ = StemmerKind::suffix_rules;
    std::stable_sort(rules.begin(), rules.end(), [](const SuffixRule& a, const SuffixRule& b) {
        return a.suffix.size() > b.suffix.size();
    });
    s.rules_ = std::move(rules);
    return s;
}

std::string Stemmer::stem(std::string_view token) const
{
    switch (kind_) {
    case StemmerKind::identity:
        break;
    case StemmerKind::dictionary:
        if (auto it = table_.find(std::string(token)); it != table_.end()) {
            return it->second;
        }
        break;
    case StemmerKind::suffix_rules:
        for (const auto& rule : rules_) {
            if (!token.ends_with(rule.suffix)) {
                continue;
            }
            std::string out(token.substr(0, token.size() - rule.suffix.size()));
            out += rule.replacement;
            if (!out.empty()) {
                return out;
            }
        }
        break;
    }
    return std::string(token);
}

Analyzer::Analyzer(const AnalyzerConfig& config)
{
    resources_.lowercase = config.lowercase;
    if (config.stopword_path) {
        resources_.stopwords = load_stopwords(*config.stopword_path);
    }
    switch (config.stemmer) {
    case StemmerKind::identity:
        break;
    case StemmerKind::dictionary:
        if (!config.stem_table_path) {
            throw ConfigError("dictionary stemmer requires a stem table path");
        }
        resources_.stemmer = Stemmer::dictionary(load_stem_table(*config.stem_table_path));
        break;
    case StemmerKind::suffix_rules:
        if (!config.suffix_rules_path) {
            throw ConfigError("suffix-rules stemmer requires a suffix rules path");
        }
        resources_.stemmer = Stemmer::suffix_rules(load_suffix_rules(*config.suffix_rules_path));
        break;
    }
}

Analyzer::Analyzer(AnalyzerResources resources) : resources_(std::move(resources)) {}

TokenSeq Analyzer::analyze(std::string_view text) const
{
    TokenSeq words = tokenize(text, resources_.lowercase);
    TokenSeq out;
    out.reserve(words.size());
    const auto& stops = resources_.stopwords;
    for (auto& word : words) {
        std::string stemmed = resources_.stemmer.stem(word);
        if (!stops.empty()) {
            // stopword sets are lowercase; compare case-insensitively when input is not folded
            const bool stop = resources_.lowercase ? stops.contains(stemmed) : stops.contains(to_lower(stemmed));
            if (stop) {
                continue;
            }
        }
        out.push_back(std::move(stemmed));
    }
    return out;
}

}  // namespace retrieval
