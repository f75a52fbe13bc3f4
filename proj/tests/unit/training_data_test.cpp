#include "retrieval/error.hpp"
#include "retrieval/training_data.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <set>
#include <sstream>

using namespace retrieval;
using testing::TempDir;

namespace {

/// `matching` passages contain the query word "szukaj", `others` do not.
Bm25Index corpus_index(std::size_t matching, std::size_t others)
{
    std::vector<Passage> corpus;
    for (std::size_t i = 0; i < matching; ++i) {
        corpus.push_back({"m" + std::to_string(i), "szukaj slowo" + std::to_string(i)});
    }
    for (std::size_t i = 0; i < others; ++i) {
        corpus.push_back({"o" + std::to_string(i), "inne wyraz" + std::to_string(i)});
    }
    return build_index(corpus, Analyzer{}, {});
}

std::size_t count_label(const std::vector<PairSample>& pairs, int label)
{
    return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [&](const auto& p) { return p.label == label; }));
}

}  // namespace

TEST_CASE("one positive with 150 eligible candidates yields 101 samples")
{
    const auto index = corpus_index(151, 20);
    const Qrels qrels = {{"q1", {"m0"}}};
    const std::vector<Query> queries = {{"q1", "szukaj", ""}};
    MiningStats stats;
    const auto pairs = mine_pairs(qrels, queries, index, {100, 2000, 1, 1}, &stats);
    REQUIRE(pairs.size() == 101);
    CHECK(pairs[0] == PairSample{"q1", "m0", 1});
    std::set<std::string> negatives;
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        CHECK(pairs[i].label == 0);
        CHECK(pairs[i].passage_id != "m0");
        CHECK(pairs[i].passage_id[0] == 'm');
        negatives.insert(pairs[i].passage_id);
    }
    CHECK(negatives.size() == 100);
    CHECK(stats.positives == 1);
    CHECK(stats.negatives == 100);
}

TEST_CASE("a small pool is used up completely")
{
    const auto index = corpus_index(41, 10);
    const auto pairs = mine_pairs({{"q1", {"m3"}}}, std::vector<Query>{{"q1", "szukaj", ""}}, index, {100, 2000, 1, 1});
    CHECK(count_label(pairs, 1) == 1);
    CHECK(count_label(pairs, 0) == 40);
}

TEST_CASE("negatives come from the top of the BM25 pool")
{
    const auto index = corpus_index(30, 10);
    const auto pairs = mine_pairs({{"q1", {"m0"}}}, std::vector<Query>{{"q1", "szukaj slowo5", ""}}, index, {3, 3, 9, 1});
    // the pool holds m5 and then the lowest ordinals among equal scores; m0 is relevant
    std::set<std::string> negatives;
    for (const auto& p : pairs) {
        if (p.label == 0) {
            negatives.insert(p.passage_id);
        }
    }
    const auto hits = index.top_k(index.analyzer().analyze("szukaj slowo5"), 3);
    std::set<std::string> expected;
    for (const auto& h : hits) {
        if (index.passage_id(h.ordinal) != "m0") {
            expected.insert(index.passage_id(h.ordinal));
        }
    }
    CHECK(negatives == expected);
    CHECK(expected == std::set<std::string>{"m5", "m1"});
}

TEST_CASE("seeded mining is reproducible and thread-count independent")
{
    const auto index = corpus_index(300, 0);
    Qrels qrels;
    std::vector<Query> queries;
    for (int q = 0; q < 8; ++q) {
        const auto id = "q" + std::to_string(q);
        qrels[id] = {"m" + std::to_string(q), "m" + std::to_string(q + 100)};
        queries.push_back({id, "szukaj slowo" + std::to_string(q), ""});
    }
    const auto a = mine_pairs(qrels, queries, index, {20, 200, 42, 1});
    const auto b = mine_pairs(qrels, queries, index, {20, 200, 42, 4});
    const auto c = mine_pairs(qrels, queries, index, {20, 200, 43, 1});
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.size() == 8 * 2 * 21);
}

TEST_CASE("queries without candidates keep their positives")
{
    const auto index = corpus_index(5, 5);
    MiningStats stats;
    const auto pairs =
        mine_pairs({{"q1", {"m1"}}}, std::vector<Query>{{"q1", "zupelnie obce", ""}}, index, {10, 100, 0, 1}, &stats);
    CHECK(pairs == std::vector<PairSample>{{"q1", "m1", 1}});
    CHECK(stats.queries_without_candidates == std::vector<std::string>{"q1"});
}

TEST_CASE("judged queries need text")
{
    const auto index = corpus_index(5, 0);
    CHECK_THROWS_AS(mine_pairs({{"q9", {"m1"}}}, std::vector<Query>{}, index, {}), DataError);
    CHECK_THROWS_AS(MiningOptions({0, 10, 0, 1}).validate(), ConfigError);
    CHECK_THROWS_AS(MiningOptions({100, 10, 0, 1}).validate(), ConfigError);
}

TEST_CASE("pair files")
{
    TempDir dir;
    const std::vector<PairSample> pairs = {{"q1", "p1", 1}, {"q1", "p2", 0}};
    write_pairs(pairs, dir / "pairs.tsv");
    CHECK(testing::read_file(dir / "pairs.tsv") == "q1\tp1\t1\nq1\tp2\t0\n");

    const std::vector<Query> queries = {{"q1", "Gdzie jest \"dom\"?", ""}};
    const PassageStore store(std::vector<Passage>{{"p1", "Dom jest tutaj"}, {"p2", "Nie tutaj"}});
    write_hydrated_pairs(pairs, queries, store, dir / "pairs.jsonl");
    std::istringstream lines(testing::read_file(dir / "pairs.jsonl"));
    std::string line;
    REQUIRE(std::getline(lines, line));
    const auto first = nlohmann::json::parse(line);
    CHECK(first.at("query") == "Gdzie jest \"dom\"?");
    CHECK(first.at("passage") == "Dom jest tutaj");
    CHECK(first.at("label") == 1);
    REQUIRE(std::getline(lines, line));
    CHECK(nlohmann::json::parse(line).at("passage_id") == "p2");
}
