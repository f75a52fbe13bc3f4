#include "retrieval/error.hpp"
#include "retrieval/pipeline_config.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace retrieval;
using testing::TempDir;
using testing::write_file;

namespace {

auto message_contains(const std::string& text)
{
    return Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(text));
}

}  // namespace

TEST_CASE("defaults carry the per-domain budgets")
{
    const auto config = PipelineConfig::defaults();
    CHECK(config.budget_for("wiki-trivia") == 3000);
    CHECK(config.budget_for("legal-questions") == 1500);
    CHECK(config.budget_for("allegro-faq") == kAllResults);
    CHECK(config.budget_for("other") == kAllResults);
    CHECK(config.bm25 == Bm25Params{});
    CHECK(config.search_k == 3000);
    CHECK(config.eval_k == 10);
    CHECK(config.negatives_per_positive == 100);
    CHECK(config.negative_pool == 2000);
    CHECK_NOTHROW(config.validate());
}

TEST_CASE("a full config document")
{
    TempDir dir;
    std::filesystem::create_directories(dir / "conf");
    const auto path = write_file(dir / "conf" / "p.ini", R"(
; comment
[analyzer]
lowercase = false
stemmer = suffix-rules
suffix_rules = rules.tsv
stopwords = /abs/stop.txt

[bm25]
k1 = 0.9
b = 0.4

[paths]
corpus = ../data/corpus.jsonl

[rerank]
budget = 100
batch_size = 8
scorers = herbert, overlap

[scorer.herbert]
kind = remote
endpoint = http://localhost:9000/herbert
timeout_ms = 3000
max_batch = 64

[scorer.overlap]
kind = lexical-overlap

[scorer.half]
kind = constant
value = 0.5

[domain.legal-questions]
budget = 1000
scorers = half

[mining]
negatives = 10
pool = 50
seed = 7
)");
    const auto config = PipelineConfig::load(path);
    CHECK_FALSE(config.analyzer.lowercase);
    CHECK(config.analyzer.stemmer == StemmerKind::suffix_rules);
    CHECK(*config.analyzer.suffix_rules_path == dir / "conf" / "rules.tsv");
    CHECK(*config.analyzer.stopword_path == "/abs/stop.txt");
    CHECK(*config.paths.corpus == dir / "conf" / "../data/corpus.jsonl");
    CHECK(config.bm25.k1 == 0.9);
    CHECK(config.bm25.b == 0.4);
    CHECK(config.bm25.epsilon == 0.25);
    CHECK(config.batch_size == 8);
    CHECK(config.default_scorers == std::vector<std::string>{"herbert", "overlap"});
    CHECK(config.scorers.at("herbert").timeout == std::chrono::milliseconds(3000));
    CHECK(config.scorers.at("herbert").max_batch == 64);
    CHECK(config.scorers.at("herbert").retries == 2);
    CHECK(config.budget_for("legal-questions") == 1000);
    CHECK(config.budget_for("wiki-trivia") == 3000);
    CHECK(config.budget_for("unknown") == 100);
    CHECK(config.scorers_for("legal-questions") == std::vector<std::string>{"half"});
    CHECK(config.scorers_for("allegro-faq") == config.default_scorers);
    CHECK(config.seed == 7);
}

TEST_CASE("config errors")
{
    TempDir dir;
    auto load = [&](const std::string& text) { return PipelineConfig::load(write_file(dir / "c.ini", text)); };
    CHECK_THROWS_MATCHES(load("[bm25]\nk2 = 1\n"), ConfigError, message_contains("k2"));
    CHECK_THROWS_MATCHES(load("[bm25]\nb = high\n"), ConfigError, message_contains("bm25.b"));
    CHECK_THROWS_AS(load("[bm25]\nb = 2\n"), ConfigError);
    CHECK_THROWS_AS(load("[searching]\nk = 1\n"), ConfigError);
    CHECK_THROWS_MATCHES(load("[rerank]\nscorers = ghost\n"), ConfigError, message_contains("ghost"));
    CHECK_THROWS_AS(load("[scorer.x]\nkind = remote\n[rerank]\nscorers = x\n"), ConfigError);
    CHECK_THROWS_AS(load("[scorer.x]\nendpoint = http://h\n"), ConfigError);
    CHECK_THROWS_AS(load("[domain.wiki-trivia]\nbudget = 0\n"), ConfigError);
    CHECK_THROWS_AS(load("[mining]\nnegatives = 100\npool = 10\n"), ConfigError);
    CHECK_THROWS_AS(load("[analyzer\n"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::load(dir / "absent.ini"), ConfigError);
}

TEST_CASE("budget parsing")
{
    CHECK(parse_budget("all") == kAllResults);
    CHECK(parse_budget("1500") == 1500);
    CHECK_THROWS_AS(parse_budget("0"), ConfigError);
    CHECK_THROWS_AS(parse_budget("-3"), ConfigError);
    CHECK_THROWS_AS(parse_budget("10x"), ConfigError);
}

TEST_CASE("ensemble factory resolves scorers per domain")
{
    auto config = PipelineConfig::defaults();
    ScorerHandle half;
    half.name = "half";
    half.kind = ScorerKind::constant;
    config.scorers["half"] = half;
    config.domains["legal-questions"].scorers = {"half", "lexical-overlap"};
    const EnsembleFactory factory(config, std::make_shared<Analyzer>());

    const auto legal = factory.for_domain("legal-questions");
    CHECK(legal.budget == 1500);
    REQUIRE(legal.ensemble.size() == 2);
    CHECK(legal.ensemble[0]->name() == "half");

    const auto wiki = factory.for_domain("wiki-trivia", 10);
    CHECK(wiki.budget == 10);
    REQUIRE(wiki.ensemble.size() == 1);
    CHECK(wiki.ensemble[0]->name() == "lexical-overlap");
}

TEST_CASE("the bundled ensemble config is valid")
{
    const auto config = PipelineConfig::load(testing::kSourceDir / "configs" / "ensemble.ini");
    CHECK(config.default_scorers.size() == 3);
    CHECK(config.scorers.at("ce-polish").kind == ScorerKind::remote);
    CHECK(config.budget_for("legal-questions") == 1500);
    CHECK(config.analyzer.stopword_path->filename() == "stopwords_pl.txt");
}
