#include "retrieval/training_data.hpp"

#include "retrieval/error.hpp"
#include "retrieval/parallel.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <random>
#include <unordered_map>

namespace retrieval {

void MiningOptions::validate() const
{
    if (negatives_per_positive == 0) {
        throw ConfigError("negatives per positive must be at least 1");
    }
    if (pool < negatives_per_positive) {
        throw ConfigError("negative pool (" + std::to_string(pool) + ") must not be smaller than negatives per positive (" +
                          std::to_string(negatives_per_positive) + ")");
    }
}

std::vector<PairSample> mine_pairs(const Qrels& qrels, std::span<const Query> queries, const Bm25Index& index,
                                   const MiningOptions& options, MiningStats* stats)
{
    options.validate();

    std::vector<const Query*> judged;
    std::unordered_map<std::string_view, const Query*> by_id;
    for (const auto& query : queries) {
        by_id.emplace(query.id, &query);
        if (qrels.contains(query.id)) {
            judged.push_back(&query);
        }
    }
    for (const auto& [query_id, relevant] : qrels) {
        if (!by_id.contains(query_id)) {
            throw DataError("judged query has no text: " + query_id);
        }
    }

    std::vector<std::vector<PairSample>> per_query(judged.size());
    std::vector<char> no_candidates(judged.size(), 0);
    parallel_for(judged.size(), options.threads, [&](std::size_t q) {
        const Query& query = *judged[q];
        const auto& relevant = qrels.at(query.id);

        std::vector<std::uint32_t> eligible;
        const auto hits = index.top_k(index.analyzer().analyze(query.text), options.pool);
        no_candidates[q] = hits.empty() ? 1 : 0;
        for (const auto& hit : hits) {
            if (!relevant.contains(index.passage_id(hit.ordinal))) {
                eligible.push_back(hit.ordinal);
            }
        }

        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(static_cast<std::uint64_t>(q) >> 32)};
        std::mt19937_64 rng(seq);

        auto& out = per_query[q];
        const std::size_t take = std::min(options.negatives_per_positive, eligible.size());
        for (const auto& positive : relevant) {
            out.push_back({query.id, positive, 1});
            // partial Fisher-Yates: the first `take` slots become the sample
            for (std::size_t i = 0; i < take; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
                std::swap(eligible[i], eligible[pick(rng)]);
                out.push_back({query.id, index.passage_id(eligible[i]), 0});
            }
        }
    });

    MiningStats local;
    std::vector<PairSample> samples;
    for (std::size_t q = 0; q < judged.size(); ++q) {
        ++local.queries;
        if (no_candidates[q] != 0) {
            spdlog::warn("query {} has no BM25 candidates; emitting positives only", judged[q]->id);
            local.queries_without_candidates.push_back(judged[q]->id);
        }
        for (auto& sample : per_query[q]) {
            (sample.label == 1 ? local.positives : local.negatives) += 1;
            samples.push_back(std::move(sample));
        }
    }
    if (stats != nullptr) {
        *stats = std::move(local);
    }
    return samples;
}

void write_pairs(std::span<const PairSample> pairs, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write pairs file: " + path.string());
    }
    for (const auto& pair : pairs) {
        out << pair.query_id << '\t' << pair.passage_id << '\t' << pair.label << '\n';
    }
    out.close();
    if (!out) {
        throw DataError("failed writing pairs file: " + path.string());
    }
}

void write_hydrated_pairs(std::span<const PairSample> pairs, std::span<const Query> queries,
                          const PassageStore& passages, const std::filesystem::path& path)
{
    std::unordered_map<std::string_view, std::string_view> query_text;
    for (const auto& query : queries) {
        query_text.emplace(query.id, query.text);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write pairs file: " + path.string());
    }
    for (const auto& pair : pairs) {
        const auto it = query_text.find(pair.query_id);
        if (it == query_text.end()) {
            throw DataError("no text for query " + pair.query_id);
        }
        nlohmann::ordered_json line{{"query_id", pair.query_id},
                                    {"passage_id", pair.passage_id},
                                    {"label", pair.label},
                                    {"query", it->second},
                                    {"passage", passages.text(pair.passage_id)}};
        out << line.dump() << '\n';
    }
    out.close();
    if (!out) {
        throw DataError("failed writing pairs file: " + path.string());
    }
}

}  // namespace retrieval
