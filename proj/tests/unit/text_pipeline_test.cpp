#include "retrieval/error.hpp"
#include "retrieval/text_pipeline.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace retrieval;
using testing::TempDir;
using testing::write_file;

namespace {

Analyzer make_analyzer(StopwordSet stopwords, Stemmer stemmer = {}, bool lowercase = true)
{
    return Analyzer(AnalyzerResources{lowercase, std::move(stopwords), std::move(stemmer)});
}

}  // namespace

TEST_CASE("tokenize splits on non-alphanumerics and keeps Polish letters")
{
    CHECK(tokenize("", true).empty());
    CHECK(tokenize("  ,.;  ", true).empty());
    CHECK(tokenize("Zażółć gęślą jaźń!", true) == TokenSeq{"zażółć", "gęślą", "jaźń"});
    CHECK(tokenize("ŻÓŁW", false) == TokenSeq{"ŻÓŁW"});
    CHECK(tokenize("rok 1410, a-b_c", true) == TokenSeq{"rok", "1410", "a", "b", "c"});
}

TEST_CASE("tokenize treats combining marks as part of the word")
{
    // "e" followed by U+0328 COMBINING OGONEK
    CHECK(tokenize("re\xCC\xA8ka", true) == TokenSeq{"re\xCC\xA8ka"});
}

TEST_CASE("tokenize skips invalid UTF-8 bytes")
{
    CHECK(tokenize("ab\xFF" "cd", true) == TokenSeq{"ab", "cd"});
}

TEST_CASE("to_lower maps Polish capitals")
{
    CHECK(to_lower("ĄĆĘŁŃÓŚŹŻ") == "ąćęłńóśźż");
    CHECK(to_lower("Kot") == "kot");
}

TEST_CASE("analyze on empty input is empty")
{
    CHECK(make_analyzer({}).analyze("").empty());
    CHECK(make_analyzer({"i"}).analyze("").empty());
}

TEST_CASE("analyze case-folds before stopword filtering")
{
    CHECK(make_analyzer({"i"}).analyze("Kot i KOT") == TokenSeq{"kot", "kot"});
}

TEST_CASE("analyze without lowercasing still drops stopwords case-insensitively")
{
    const auto analyzer = make_analyzer({"i"}, {}, false);
    CHECK(analyzer.analyze("Kot I KOT i") == TokenSeq{"Kot", "KOT"});
}

TEST_CASE("analyze applies the stem table and then the stopword list")
{
    const auto stemmer = Stemmer::dictionary({{"państwach", "państwo"}, {"starożytnych", "starożytny"}, {"był", "być"}});
    const auto analyzer = make_analyzer({"czy", "w", "być"}, stemmer);
    CHECK(analyzer.analyze("Czy w państwach starożytnych był senat?") ==
          TokenSeq{"państwo", "starożytny", "senat"});
}

TEST_CASE("analyze is deterministic and idempotent on its own output")
{
    // stems are not themselves table keys, so re-analysis is a fixed point
    const auto analyzer = make_analyzer({"oraz", "w"}, Stemmer::dictionary({{"domami", "dom"}, {"kotami", "kot"}}));
    const std::string text = "Domami oraz KOTAMI, w Miastach 2024 r.";
    const auto once = analyzer.analyze(text);
    CHECK(once == TokenSeq{"dom", "kot", "miastach", "2024", "r"});
    CHECK(once == analyzer.analyze(text));
    std::string joined;
    for (const auto& t : once) {
        joined += t + " ";
    }
    CHECK(analyzer.analyze(joined) == once);
}

TEST_CASE("load_stopwords skips comments and deduplicates case variants")
{
    TempDir dir;
    CHECK(load_stopwords(write_file(dir / "a.txt", "i\n#c\nI\n")) == StopwordSet{"i"});
    CHECK(load_stopwords(write_file(dir / "b.txt", "")).empty());
    CHECK(load_stopwords(write_file(dir / "c.txt", "oraz\nże\n")) == StopwordSet{"oraz", "że"});
    CHECK(load_stopwords(write_file(dir / "d.txt", "\xEF\xBB\xBForaz\r\n\r\n  # note\r\n")) == StopwordSet{"oraz"});
}

TEST_CASE("missing resource files are configuration errors naming the path")
{
    TempDir dir;
    const auto missing = dir / "nope.txt";
    CHECK_THROWS_MATCHES(load_stopwords(missing), ConfigError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("nope.txt")));
    CHECK_THROWS_AS(load_stem_table(missing), ConfigError);
    AnalyzerConfig config;
    config.stopword_path = missing;
    CHECK_THROWS_AS(Analyzer(config), ConfigError);
}

TEST_CASE("stem table parsing")
{
    TempDir dir;
    const auto table = load_stem_table(write_file(dir / "t.tsv", "# surface\tstem\nkotami\tkot\n\ndomach\tdom\n"));
    CHECK(table.size() == 2);
    CHECK(table.at("kotami") == "kot");
    CHECK_THROWS_AS(load_stem_table(write_file(dir / "bad.tsv", "kotami kot\n")), ConfigError);
}

TEST_CASE("stemmer kinds")
{
    CHECK(Stemmer{}.stem("kot") == "kot");
    CHECK(Stemmer::dictionary({{"kotami", "kot"}}).stem("kotami") == "kot");
    CHECK(Stemmer::dictionary({{"kotami", "kot"}}).stem("psami") == "psami");
    const auto rules = Stemmer::suffix_rules({{"ami", ""}});
    CHECK(rules.stem("domami") == "dom");
    CHECK(rules.stem("ami") == "ami");
    CHECK(rules.stem("dom") == "dom");
}

TEST_CASE("suffix rules prefer the longest suffix and apply once")
{
    const auto stemmer = Stemmer::suffix_rules({{"i", ""}, {"ami", "a"}, {"mi", "x"}});
    CHECK(stemmer.rules().front().suffix == "ami");
    CHECK(stemmer.stem("domami") == "doma");
    CHECK(stemmer.stem("koci") == "koc");

    TempDir dir;
    const auto loaded = load_suffix_rules(write_file(dir / "r.tsv", "ach\t\nowie\ta\n"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == SuffixRule{"ach", ""});
}

TEST_CASE("analyzer config loads resources and validates stemmer requirements")
{
    TempDir dir;
    AnalyzerConfig config;
    config.stemmer = StemmerKind::dictionary;
    CHECK_THROWS_AS(Analyzer(config), ConfigError);

    config.stem_table_path = write_file(dir / "t.tsv", "kotami\tkot\n");
    config.stopword_path = write_file(dir / "s.txt", "i\n");
    const Analyzer analyzer(config);
    CHECK(analyzer.analyze("Kotami i psami") == TokenSeq{"kot", "psami"});
}

TEST_CASE("stemmer kind names round-trip")
{
    for (auto kind : {StemmerKind::identity, StemmerKind::suffix_rules, StemmerKind::dictionary}) {
        CHECK(parse_stemmer_kind(to_string(kind)) == kind);
    }
    CHECK(parse_stemmer_kind("suffix_rules") == StemmerKind::suffix_rules);
    CHECK_THROWS_AS(parse_stemmer_kind("porter"), ConfigError);
}
