#include "retrieval/bm25_index.hpp"
#include "retrieval/error.hpp"
#include "retrieval/index_io.hpp"

#include "oracle/reference.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <random>

using namespace retrieval;
using Catch::Approx;
using testing::TempDir;

namespace {

Bm25Index index_of(const std::vector<oracle::Doc>& docs, Bm25Params params = {})
{
    Bm25IndexBuilder builder(Analyzer{}, params);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        builder.add_tokens("d" + std::to_string(d), docs[d]);
    }
    return std::move(builder).finish();
}

const std::vector<oracle::Doc> kTiny = {{"a", "b"}, {"a", "a", "b"}, {"c"}};

}  // namespace

TEST_CASE("raw idf follows the Robertson formula")
{
    CHECK(raw_idf(3, 1) == Approx(0.5108256237659907).epsilon(1e-12));
    CHECK(raw_idf(3, 3) == Approx(std::log(0.5 / 3.5)));
    CHECK(raw_idf(3, 3) < 0);
}

TEST_CASE("term in one of three docs keeps its raw idf")
{
    const auto index = index_of(kTiny);
    CHECK(index.idf("c") == Approx(std::log(2.5 / 1.5)).margin(1e-12));
}

TEST_CASE("non-positive idf is floored at epsilon times the mean positive idf")
{
    // "x" occurs everywhere; "a" and "b" once each
    const auto index = index_of({{"x", "a"}, {"x", "b"}, {"x"}});
    const double positive = std::log(2.5 / 1.5);
    CHECK(index.idf("x") == Approx(0.25 * positive).margin(1e-12));
    CHECK(index.idf("a") == Approx(positive).margin(1e-12));
    CHECK(index.idf("missing") == 0.0);
}

TEST_CASE("a term in exactly half the docs has zero raw idf and is floored")
{
    const auto index = index_of({{"h", "u"}, {"h"}, {"v"}, {"w"}});
    // raw idf of h is ln(2.5/2.5) = 0, which counts as non-positive
    const double u = std::log(3.5 / 1.5);
    CHECK(index.idf("h") == Approx(0.25 * u).margin(1e-12));
}

TEST_CASE("without any positive idf the floor falls back to epsilon")
{
    const auto index = index_of({{"a"}});
    CHECK(index.idf("a") == 0.25);
}

TEST_CASE("single document corpus")
{
    const auto index = index_of({{"a", "b", "c", "d", "e"}});
    CHECK(index.num_docs() == 1);
    CHECK(index.avgdl() == 5.0);
    CHECK(index.doc_length(0) == 5);
}

TEST_CASE("scores of the tiny corpus agree with the brute-force formula")
{
    const auto index = index_of(kTiny);
    const oracle::Bm25 reference(kTiny);
    for (const auto& query : {oracle::Doc{"a"}, oracle::Doc{"b", "c"}, oracle::Doc{"a", "a"}, oracle::Doc{"z"}}) {
        for (std::uint32_t d = 0; d < 3; ++d) {
            CHECK(index.score(query, d) == Approx(reference.score(query, d)).margin(1e-12));
        }
    }
    CHECK(index.score(std::vector<std::string>{"zzz"}, 0) == 0.0);
    CHECK(index.score(std::vector<std::string>{}, 0) == 0.0);
}

TEST_CASE("a repeated query term contributes once per occurrence")
{
    const auto index = index_of(kTiny);
    const std::vector<std::string> once{"a"};
    const std::vector<std::string> twice{"a", "a"};
    CHECK(index.score(twice, 1) == Approx(2 * index.score(once, 1)).epsilon(1e-15));
}

TEST_CASE("top-k ordering matches exhaustive scoring")
{
    const auto index = index_of(kTiny);
    const std::vector<std::string> query{"a"};
    const auto hits = index.top_k(query, 2);
    REQUIRE(hits.size() == 2);
    const auto expected = oracle::Bm25(kTiny).rank(query);
    CHECK(hits[0].ordinal == expected[0].first);
    CHECK(hits[1].ordinal == expected[1].first);
    CHECK(hits[0].score == index.score(query, hits[0].ordinal));
}

TEST_CASE("k beyond the number of matches returns every matching doc")
{
    const auto index = index_of(kTiny);
    CHECK(index.top_k(std::vector<std::string>{"b"}, 100).size() == 2);
    CHECK(index.top_k(std::vector<std::string>{"nothing"}, 100).empty());
}

TEST_CASE("equal scores are ordered by ordinal")
{
    const auto index = index_of({{"q", "x"}, {"y"}, {"q", "x"}, {"q", "x"}});
    const auto list = index.retrieve_topk("query", std::vector<std::string>{"q"}, 10);
    REQUIRE(list.size() == 3);
    CHECK(list.entries[0].passage_id == "d0");
    CHECK(list.entries[1].passage_id == "d2");
    CHECK(list.entries[2].passage_id == "d3");
    CHECK(list.query_id == "query");
}

TEST_CASE("with b = 0 the document length does not matter")
{
    Bm25Params params;
    params.b = 0.0;
    const auto index = index_of({{"t", "f", "f", "f", "f"}, {"t"}, {"u"}}, params);
    const std::vector<std::string> query{"t"};
    CHECK(index.score(query, 0) == index.score(query, 1));
}

TEST_CASE("score grows with term frequency and shrinks with document length")
{
    const auto index = index_of({{"t"}, {"t", "t"}, {"t", "t", "t"}, {"t", "f", "f", "f"}, {"u"}, {"v"}, {"w"}});
    const std::vector<std::string> query{"t"};
    CHECK(index.score(query, 0) < index.score(query, 1));
    CHECK(index.score(query, 1) < index.score(query, 2));
    CHECK(index.score(query, 3) < index.score(query, 0));
}

TEST_CASE("builder analyzes raw passages and rejects bad input")
{
    const std::vector<Passage> corpus = {{"p1", "Kot i pies"}, {"p2", "KOT"}};
    const auto index = build_index(corpus, Analyzer(AnalyzerResources{true, {"i"}, {}}), {});
    CHECK(index.num_docs() == 2);
    CHECK(index.doc_length(0) == 2);
    CHECK(index.ordinal_of("p2") == 1u);
    CHECK_FALSE(index.ordinal_of("p3"));
    const auto list = index.retrieve_topk("q", "pies", 5);
    REQUIRE(list.size() == 1);
    CHECK(list.entries[0].passage_id == "p1");

    const std::vector<Passage> duplicated = {{"p1", "a"}, {"p1", "b"}};
    CHECK_THROWS_MATCHES(build_index(duplicated, Analyzer{}, {}), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("p1")));
    CHECK_THROWS_AS(build_index(std::vector<Passage>{}, Analyzer{}, {}), DataError);
}

TEST_CASE("index content does not depend on the thread count")
{
    std::vector<Passage> corpus;
    std::mt19937 rng(7);
    for (int i = 0; i < 300; ++i) {
        std::string text;
        for (int w = 0; w < 12; ++w) {
            text += "w" + std::to_string(rng() % 40) + " ";
        }
        corpus.push_back({"p" + std::to_string(i), text});
    }
    const auto one = build_index(corpus, Analyzer{}, {}, 1);
    const auto four = build_index(corpus, Analyzer{}, {}, 4);
    CHECK(one.parts().terms == four.parts().terms);
    CHECK(one.parts().posting_ordinals == four.parts().posting_ordinals);
    CHECK(one.parts().posting_freqs == four.parts().posting_freqs);
    CHECK(one.parts().idf == four.parts().idf);
}

TEST_CASE("parameter validation")
{
    Bm25Params params;
    CHECK_NOTHROW(params.validate());
    params.b = 1.5;
    CHECK_THROWS_AS(params.validate(), ConfigError);
    params = {};
    params.k1 = -1;
    CHECK_THROWS_AS(params.validate(), ConfigError);
    params = {};
    params.epsilon = std::nan("");
    CHECK_THROWS_AS(params.validate(), ConfigError);
}

TEST_CASE("scoring an unknown ordinal is an error")
{
    const auto index = index_of(kTiny);
    CHECK_THROWS_AS(index.score(std::vector<std::string>{"a"}, 3), DataError);
}

TEST_CASE("save and load preserve retrieval results and analyzer settings")
{
    TempDir dir;
    const std::vector<Passage> corpus = {{"p1", "Domami i kotami"}, {"p2", "dom kot"}, {"p3", "pies"}};
    const Analyzer analyzer(AnalyzerResources{true, {"i"}, Stemmer::suffix_rules({{"ami", ""}})});
    const auto index = build_index(corpus, analyzer, {1.5, 0.5, 0.1});
    save_index(index, dir / "x.idx");
    const auto loaded = load_index(dir / "x.idx");

    CHECK(loaded.params() == index.params());
    CHECK(loaded.parts().passage_ids == index.parts().passage_ids);
    CHECK(loaded.parts().idf == index.parts().idf);
    CHECK(loaded.analyzer().stopwords() == index.analyzer().stopwords());
    CHECK(loaded.analyzer().stemmer().rules() == index.analyzer().stemmer().rules());
    for (const char* q : {"Dom", "kotami", "pies i dom"}) {
        CHECK(loaded.retrieve_topk("q", q, 10) == index.retrieve_topk("q", q, 10));
    }

    // equal indexes serialize to identical bytes
    save_index(loaded, dir / "y.idx");
    CHECK(testing::read_file(dir / "x.idx") == testing::read_file(dir / "y.idx"));
}

TEST_CASE("damaged index files are rejected")
{
    TempDir dir;
    const auto index = index_of(kTiny);
    save_index(index, dir / "good.idx");
    const auto bytes = testing::read_file(dir / "good.idx");

    auto damaged = [&](const std::string& name, std::string content) {
        testing::write_file(dir / name, content);
        return dir / name;
    };

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_MATCHES(load_index(damaged("magic.idx", bad_magic)), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("magic")));

    std::string bad_version = bytes;
    bad_version[8] = 9;
    CHECK_THROWS_MATCHES(load_index(damaged("version.idx", bad_version)), DataError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("version")));

    CHECK_THROWS_AS(load_index(damaged("short.idx", bytes.substr(0, bytes.size() / 2))), DataError);
    CHECK_THROWS_AS(load_index(damaged("tiny.idx", bytes.substr(0, 10))), DataError);

    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x5A;
    CHECK_THROWS_AS(load_index(damaged("flip.idx", flipped)), DataError);

    CHECK_THROWS_AS(load_index(dir / "absent.idx"), DataError);
}
