#include "commands.hpp"

#include "retrieval/bm25_index.hpp"
#include "retrieval/corpus_io.hpp"
#include "retrieval/error.hpp"
#include "retrieval/eval.hpp"
#include "retrieval/index_io.hpp"
#include "retrieval/parallel.hpp"
#include "retrieval/pipeline_config.hpp"
#include "retrieval/rerank.hpp"
#include "retrieval/training_data.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace retrieval::cli {

namespace fs = std::filesystem;

namespace {

class StageTimer {
public:
    explicit StageTimer(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer()
    {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        spdlog::info("{} finished in {:.3f}s", stage_, elapsed);
    }
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

private:
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

/// Flags shared by every command; values given on the command line override the config.
struct GlobalFlags {
    std::string config;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    bool quiet = false;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

struct PathFlags {
    std::string corpus, queries, qrels, index, output;
};

struct AnalyzerFlags {
    std::string stemmer, stopwords, stem_table, suffix_rules;
    bool no_lowercase = false;
};

struct Bm25Flags {
    double k1 = 0, b = 0, epsilon = 0;
    CLI::Option *k1_opt = nullptr, *b_opt = nullptr, *epsilon_opt = nullptr;
};

void add_path(CLI::App* cmd, const std::string& name, std::string& target, const std::string& help)
{
    cmd->add_option("--" + name, target, help);
}

void add_analyzer_flags(CLI::App* cmd, AnalyzerFlags& flags)
{
    cmd->add_option("--stemmer", flags.stemmer, "identity | suffix-rules | dictionary");
    cmd->add_option("--stopwords", flags.stopwords, "Stopword list, one word per line");
    cmd->add_option("--stem-table", flags.stem_table, "TSV surface<TAB>stem for the dictionary stemmer");
    cmd->add_option("--suffix-rules", flags.suffix_rules, "TSV suffix<TAB>replacement for the suffix stemmer");
    cmd->add_flag("--no-lowercase", flags.no_lowercase, "Keep the original letter case");
}

PipelineConfig resolve_config(const GlobalFlags& global, const PathFlags& paths, const AnalyzerFlags* analyzer,
                              const Bm25Flags* bm25)
{
    PipelineConfig config = global.config.empty() ? PipelineConfig::defaults() : PipelineConfig::load(global.config);
    auto set_path = [](std::optional<fs::path>& target, const std::string& value) {
        if (!value.empty()) {
            target = value;
        }
    };
    set_path(config.paths.corpus, paths.corpus);
    set_path(config.paths.queries, paths.queries);
    set_path(config.paths.qrels, paths.qrels);
    set_path(config.paths.index, paths.index);
    set_path(config.paths.output, paths.output);
    if (analyzer != nullptr) {
        if (!analyzer->stemmer.empty()) {
            config.analyzer.stemmer = parse_stemmer_kind(analyzer->stemmer);
        }
        set_path(config.analyzer.stopword_path, analyzer->stopwords);
        set_path(config.analyzer.stem_table_path, analyzer->stem_table);
        set_path(config.analyzer.suffix_rules_path, analyzer->suffix_rules);
        if (analyzer->no_lowercase) {
            config.analyzer.lowercase = false;
        }
    }
    if (bm25 != nullptr) {
        if (bm25->k1_opt->count() > 0) {
            config.bm25.k1 = bm25->k1;
        }
        if (bm25->b_opt->count() > 0) {
            config.bm25.b = bm25->b;
        }
        if (bm25->epsilon_opt->count() > 0) {
            config.bm25.epsilon = bm25->epsilon;
        }
    }
    if (global.threads_opt->count() > 0) {
        config.threads = global.threads;
    }
    if (global.seed_opt->count() > 0) {
        config.seed = global.seed;
    }
    if (config.threads == 0) {
        config.threads = default_thread_count();
    }
    config.validate();
    return config;
}

const fs::path& require_input(const std::optional<fs::path>& path, const std::string& what)
{
    if (!path) {
        throw ConfigError("no " + what + " path given");
    }
    if (!fs::exists(*path)) {
        throw DataError(what + " file not found: " + path->string());
    }
    return *path;
}

const fs::path& require_output(const std::optional<fs::path>& path, const std::string& what)
{
    if (!path) {
        throw ConfigError("no " + what + " path given");
    }
    return *path;
}

std::map<std::string, std::string> domain_map(std::span<const Query> queries)
{
    std::map<std::string, std::string> out;
    for (const auto& q : queries) {
        out.emplace(q.id, q.domain);
    }
    return out;
}

std::vector<std::string> query_ids(std::span<const Query> queries)
{
    std::vector<std::string> ids;
    ids.reserve(queries.size());
    for (const auto& q : queries) {
        ids.push_back(q.id);
    }
    return ids;
}

fs::path with_suffix(const fs::path& path, const std::string& suffix)
{
    auto out = path.parent_path() / path.stem();
    out += suffix;
    out += path.extension();
    return out;
}

std::string budget_label(std::size_t budget)
{
    return budget == kAllResults ? std::string("all") : std::to_string(budget);
}

// ---------------------------------------------------------------------------

void cmd_index(const PipelineConfig& config)
{
    const auto& corpus = require_input(config.paths.corpus, "corpus");
    const auto& index_path = require_output(config.paths.index, "index");

    const Analyzer analyzer(config.analyzer);
    Bm25IndexBuilder builder(analyzer, config.bm25, config.threads);
    {
        StageTimer timer("indexing");
        read_passages(corpus, 1 << 16, [&](std::vector<Passage>&& batch) {
            builder.add(batch);
            spdlog::info("indexed {} passages", builder.size());
        });
    }
    const auto index = std::move(builder).finish();
    {
        StageTimer timer("writing index");
        save_index(index, index_path);
    }
    std::cout << "passages " << index.num_docs() << "\n"
              << "avgdl " << format_score(index.avgdl()) << "\n"
              << "terms " << index.num_terms() << "\n"
              << "postings " << index.num_postings() << "\n"
              << "index " << index_path.string() << "\n";
}

void cmd_search(const PipelineConfig& config, const std::string& challenge_output)
{
    const auto& index_path = require_input(config.paths.index, "index");
    const auto& queries_path = require_input(config.paths.queries, "queries");
    const auto& output = require_output(config.paths.output, "output");

    const auto index = [&] {
        StageTimer timer("loading index");
        return load_index(index_path);
    }();
    spdlog::info("index: {} passages, {} terms", index.num_docs(), index.num_terms());
    const auto queries = load_queries(queries_path);

    Run run(queries.size());
    {
        StageTimer timer("retrieval");
        parallel_for(queries.size(), config.threads, [&](std::size_t i) {
            run[i] = index.retrieve_topk(queries[i].id, queries[i].text, config.search_k);
        });
    }
    std::size_t empty = 0;
    for (const auto& list : run) {
        empty += list.empty() ? 1 : 0;
    }
    spdlog::info("retrieved up to {} candidates for {} queries ({} without candidates)", config.search_k,
                 queries.size(), empty);
    write_run(run, output);
    if (!challenge_output.empty()) {
        write_challenge_format(run, query_ids(queries), challenge_output);
    }
}

void cmd_rerank(const PipelineConfig& config, const std::string& run_in, const std::vector<std::string>& budget_list,
                const std::string& challenge_output)
{
    const fs::path run_path = require_input(run_in.empty() ? std::optional<fs::path>{} : std::optional<fs::path>{run_in},
                                            "input run");
    const auto& corpus = require_input(config.paths.corpus, "corpus");
    const auto& queries_path = require_input(config.paths.queries, "queries");
    const auto& output = require_output(config.paths.output, "output");

    std::vector<std::size_t> budgets;
    for (const auto& b : budget_list) {
        budgets.push_back(parse_budget(b));
    }

    const auto run = read_run(run_path);
    const auto queries = load_queries(queries_path);
    std::unordered_map<std::string_view, const Query*> query_by_id;
    for (const auto& q : queries) {
        query_by_id.emplace(q.id, &q);
    }

    auto analyzer = std::make_shared<const Analyzer>(config.analyzer);
    const EnsembleFactory factory(config, analyzer);

    // one rerank config per query; the head is scored once up to the largest budget
    std::vector<const Query*> run_queries(run.size());
    std::vector<RerankConfig> rerank_configs(run.size());
    std::vector<std::size_t> limits(run.size());
    std::unordered_set<std::string> needed;
    for (std::size_t i = 0; i < run.size(); ++i) {
        const auto it = query_by_id.find(run[i].query_id);
        if (it == query_by_id.end()) {
            throw DataError("run query not found in queries file: " + run[i].query_id);
        }
        run_queries[i] = it->second;
        rerank_configs[i] = factory.for_domain(it->second->domain);
        limits[i] = budgets.empty() ? rerank_configs[i].budget : *std::max_element(budgets.begin(), budgets.end());
        const auto head = std::min(limits[i], run[i].size());
        for (std::size_t j = 0; j < head; ++j) {
            needed.insert(run[i].entries[j].passage_id);
        }
    }
    const auto passages = [&] {
        StageTimer timer("loading passages");
        return PassageStore::load(corpus, &needed);
    }();
    spdlog::info("loaded {} passages needed for reranking", passages.size());

    std::vector<std::vector<double>> fused(run.size());
    {
        StageTimer timer("scoring");
        std::atomic<std::size_t> done{0};
        parallel_for(run.size(), config.threads, [&](std::size_t i) {
            fused[i] = score_head(run[i], *run_queries[i], rerank_configs[i], passages, limits[i]);
            const auto n = ++done;
            if (n % 100 == 0) {
                spdlog::info("scored {}/{} queries", n, run.size());
            }
        });
    }

    auto emit = [&](const fs::path& path, const std::optional<std::size_t>& budget) {
        Run out(run.size());
        for (std::size_t i = 0; i < run.size(); ++i) {
            out[i] = apply_rerank(run[i], fused[i], budget.value_or(rerank_configs[i].budget));
        }
        write_run(out, path);
        spdlog::info("wrote {}", path.string());
        return out;
    };
    if (budgets.empty()) {
        const auto out = emit(output, std::nullopt);
        if (!challenge_output.empty()) {
            write_challenge_format(out, query_ids(queries), challenge_output);
        }
        return;
    }
    for (auto budget : budgets) {
        const auto suffix = ".b" + budget_label(budget);
        const auto out = emit(with_suffix(output, suffix), budget);
        if (!challenge_output.empty()) {
            write_challenge_format(out, query_ids(queries), with_suffix(challenge_output, suffix));
        }
    }
}

void cmd_eval(const PipelineConfig& config, const std::string& run_in, const std::string& json_output)
{
    const fs::path run_path = require_input(run_in.empty() ? std::optional<fs::path>{} : std::optional<fs::path>{run_in},
                                            "run");
    const auto& qrels_path = require_input(config.paths.qrels, "qrels");
    std::map<std::string, std::string> domains;
    if (config.paths.queries) {
        domains = domain_map(load_queries(require_input(config.paths.queries, "queries")));
    }
    const auto report = evaluate(read_run(run_path), read_qrels(qrels_path), domains, config.eval_k);
    std::cout << report_to_table(report);
    if (!json_output.empty()) {
        std::ofstream out(json_output, std::ios::binary | std::ios::trunc);
        out << report_to_json(report);
        if (!out) {
            throw DataError("cannot write report: " + json_output);
        }
    }
}

void cmd_mine_pairs(const PipelineConfig& config, const std::string& hydrated_output)
{
    const auto& index_path = require_input(config.paths.index, "index");
    const auto& queries_path = require_input(config.paths.queries, "queries");
    const auto& qrels_path = require_input(config.paths.qrels, "qrels");
    const auto& output = require_output(config.paths.output, "output");
    if (!hydrated_output.empty()) {
        require_input(config.paths.corpus, "corpus");
    }

    const auto index = load_index(index_path);
    const auto queries = load_queries(queries_path);
    const auto qrels = read_qrels(qrels_path);

    MiningOptions options{config.negatives_per_positive, config.negative_pool, config.seed, config.threads};
    MiningStats stats;
    const auto pairs = [&] {
        StageTimer timer("mining");
        return mine_pairs(qrels, queries, index, options, &stats);
    }();
    write_pairs(pairs, output);
    spdlog::info("{} queries: {} positives, {} negatives", stats.queries, stats.positives, stats.negatives);
    std::cout << "queries " << stats.queries << "\npositives " << stats.positives << "\nnegatives " << stats.negatives
              << "\n";

    if (!hydrated_output.empty()) {
        std::unordered_set<std::string> needed;
        for (const auto& p : pairs) {
            needed.insert(p.passage_id);
        }
        const auto passages = PassageStore::load(*config.paths.corpus, &needed);
        write_hydrated_pairs(pairs, queries, passages, hydrated_output);
    }
}

}  // namespace

int run(int argc, const char* const* argv)
{
    CLI::App app{"Two-stage passage retrieval: BM25 candidates, ensemble reranking, NDCG evaluation"};
    app.name("passage_search");
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags global;
    app.add_option("--config", global.config, "Pipeline config file")->check(CLI::ExistingFile);
    global.threads_opt = app.add_option("--threads", global.threads, "Worker threads (default: all cores)");
    global.seed_opt = app.add_option("--seed", global.seed, "Random seed");
    app.add_flag("-q,--quiet", global.quiet, "Only log warnings and errors");

    PathFlags paths;
    AnalyzerFlags analyzer;
    Bm25Flags bm25;

    auto* index_cmd = app.add_subcommand("index", "Build a BM25 index from a corpus");
    add_path(index_cmd, "corpus", paths.corpus, "Corpus (TSV id<TAB>text or JSON lines)");
    add_path(index_cmd, "index", paths.index, "Index file to write");
    add_analyzer_flags(index_cmd, analyzer);
    bm25.k1_opt = index_cmd->add_option("--k1", bm25.k1, "BM25 k1 (default 1.2)");
    bm25.b_opt = index_cmd->add_option("--b", bm25.b, "BM25 b (default 0.75)");
    bm25.epsilon_opt = index_cmd->add_option("--epsilon", bm25.epsilon, "IDF floor factor (default 0.25)");

    std::size_t search_k = 0;
    std::string challenge_output;
    auto* search_cmd = app.add_subcommand("search", "Retrieve first-stage candidates into a run file");
    add_path(search_cmd, "index", paths.index, "Index file");
    add_path(search_cmd, "queries", paths.queries, "Queries (TSV id<TAB>text[<TAB>domain] or JSON lines)");
    add_path(search_cmd, "output", paths.output, "Run file to write");
    auto* k_opt = search_cmd->add_option("-k,--k", search_k, "Candidates per query (default 3000)");
    search_cmd->add_option("--challenge-output", challenge_output, "Also write one-line-per-query submission output");

    std::string run_in;
    std::vector<std::string> budgets;
    std::size_t batch_size = 0;
    auto* rerank_cmd = app.add_subcommand("rerank", "Rerank the head of a run with the scorer ensemble");
    rerank_cmd->add_option("--run", run_in, "First-stage run file");
    add_path(rerank_cmd, "corpus", paths.corpus, "Corpus with passage texts");
    add_path(rerank_cmd, "queries", paths.queries, "Queries file");
    add_path(rerank_cmd, "output", paths.output, "Run file to write");
    add_analyzer_flags(rerank_cmd, analyzer);
    rerank_cmd->add_option("--budget", budgets, "Budget sweep, e.g. 10,50,100 or all; one output per budget")
        ->delimiter(',');
    auto* batch_opt = rerank_cmd->add_option("--batch-size", batch_size, "Pairs per scorer call (default 32)");
    rerank_cmd->add_option("--challenge-output", challenge_output, "Also write one-line-per-query submission output");

    std::string json_output;
    std::size_t eval_k = 0;
    auto* eval_cmd = app.add_subcommand("eval", "Compute NDCG@k per query, per domain and overall");
    eval_cmd->add_option("--run", run_in, "Run file");
    add_path(eval_cmd, "qrels", paths.qrels, "Relevance judgments (TSV query_id<TAB>passage_id)");
    add_path(eval_cmd, "queries", paths.queries, "Queries file providing domains");
    auto* eval_k_opt = eval_cmd->add_option("-k,--k", eval_k, "Cutoff (default 10)");
    eval_cmd->add_option("--json", json_output, "Write the report as JSON");

    std::string hydrated_output;
    std::size_t negatives = 0;
    std::size_t pool = 0;
    auto* mine_cmd = app.add_subcommand("mine-pairs", "Emit labeled training pairs with BM25 hard negatives");
    add_path(mine_cmd, "index", paths.index, "Index file");
    add_path(mine_cmd, "queries", paths.queries, "Queries file");
    add_path(mine_cmd, "qrels", paths.qrels, "Relevance judgments");
    add_path(mine_cmd, "output", paths.output, "Pairs TSV to write");
    add_path(mine_cmd, "corpus", paths.corpus, "Corpus, required with --hydrated");
    mine_cmd->add_option("--hydrated", hydrated_output, "Also write JSON lines with texts");
    auto* neg_opt = mine_cmd->add_option("--negatives", negatives, "Negatives per positive (default 100)");
    auto* pool_opt = mine_cmd->add_option("--pool", pool, "BM25 candidates to sample from (default 2000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    spdlog::set_level(global.quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*index_cmd) {
            cmd_index(resolve_config(global, paths, &analyzer, &bm25));
        } else if (*search_cmd) {
            auto config = resolve_config(global, paths, nullptr, nullptr);
            if (k_opt->count() > 0) {
                config.search_k = search_k;
                config.validate();
            }
            cmd_search(config, challenge_output);
        } else if (*rerank_cmd) {
            auto config = resolve_config(global, paths, &analyzer, nullptr);
            if (batch_opt->count() > 0) {
                config.batch_size = batch_size;
                config.validate();
            }
            cmd_rerank(config, run_in, budgets, challenge_output);
        } else if (*eval_cmd) {
            auto config = resolve_config(global, paths, nullptr, nullptr);
            if (eval_k_opt->count() > 0) {
                config.eval_k = eval_k;
                config.validate();
            }
            cmd_eval(config, run_in, json_output);
        } else if (*mine_cmd) {
            auto config = resolve_config(global, paths, nullptr, nullptr);
            if (neg_opt->count() > 0) {
                config.negatives_per_positive = negatives;
            }
            if (pool_opt->count() > 0) {
                config.negative_pool = pool;
            }
            config.validate();
            cmd_mine_pairs(config, hydrated_output);
        }
    } catch (const ScorerError& e) {
        spdlog::error("{}", e.what());
        return kScorerError;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kDataError;
    } catch (const std::exception& e) {
        spdlog::error("unexpected failure: {}", e.what());
        return kDataError;
    }
    return kOk;
}

}  // namespace retrieval::cli
