#include "retrieval/eval.hpp"

#include "retrieval/error.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace retrieval {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) {
            return fields;
        }
        start = tab + 1;
    }
}

/// Calls fn(line_no, fields) for every non-blank line.
template <typename Fn>
void for_each_tsv_line(const std::filesystem::path& path, Fn&& fn)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        fn(line_no, split_tabs(line));
    }
    if (in.bad()) {
        throw DataError("error while reading " + path.string());
    }
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line_no, const std::string& what)
{
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

double ndcg_at_k(std::span<const std::string> ranked_ids, const std::set<std::string>& relevant, std::size_t k)
{
    if (k == 0) {
        throw DataError("ndcg cutoff k must be at least 1");
    }
    std::unordered_set<std::string_view> seen;
    seen.reserve(ranked_ids.size());
    for (const auto& id : ranked_ids) {
        if (!seen.insert(id).second) {
            throw DataError("duplicate passage id in ranking: " + id);
        }
    }
    if (relevant.empty()) {
        return 0.0;
    }
    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranked_ids.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (relevant.contains(ranked_ids[i])) {
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    double ideal = 0.0;
    const std::size_t ideal_depth = std::min(k, relevant.size());
    for (std::size_t i = 0; i < ideal_depth; ++i) {
        ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / ideal;
}

EvalReport evaluate(const Run& run, const Qrels& qrels, const std::map<std::string, std::string>& domains, std::size_t k)
{
    EvalReport report;
    report.k = k;

    std::map<std::string, const CandidateList*> by_query;
    for (const auto& list : run) {
        if (!qrels.contains(list.query_id)) {
            throw DataError("run query has no relevance judgments: " + list.query_id);
        }
        if (!by_query.emplace(list.query_id, &list).second) {
            throw DataError("query appears twice in run: " + list.query_id);
        }
    }

    std::map<std::string, double> domain_sums;
    double total = 0.0;
    std::vector<std::string> ids;
    for (const auto& [query_id, relevant] : qrels) {
        double value = 0.0;
        if (auto it = by_query.find(query_id); it != by_query.end()) {
            ids.clear();
            for (const auto& entry : it->second->entries) {
                ids.push_back(entry.passage_id);
            }
            value = ndcg_at_k(ids, relevant, k);
        }
        report.per_query.emplace(query_id, value);
        const auto domain_it = domains.find(query_id);
        const auto& domain = (domain_it == domains.end() || domain_it->second.empty()) ? kDefaultDomain : domain_it->second;
        domain_sums[domain] += value;
        ++report.per_domain[domain].queries;
        total += value;
    }
    for (auto& [domain, score] : report.per_domain) {
        score.mean = domain_sums[domain] / static_cast<double>(score.queries);
    }
    report.overall = qrels.empty() ? 0.0 : total / static_cast<double>(qrels.size());
    return report;
}

Qrels read_qrels(const std::filesystem::path& path)
{
    Qrels qrels;
    for_each_tsv_line(path, [&](std::size_t line_no, const std::vector<std::string_view>& fields) {
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            parse_error(path, line_no, "expected 'query_id<TAB>passage_id'");
        }
        if (!qrels[std::string(fields[0])].insert(std::string(fields[1])).second) {
            parse_error(path, line_no, "duplicate judgment for (" + std::string(fields[0]) + ", " +
                                           std::string(fields[1]) + ")");
        }
    });
    return qrels;
}

Run read_run(const std::filesystem::path& path)
{
    Run run;
    std::unordered_set<std::string> finished;
    std::unordered_set<std::string> current_ids;
    for_each_tsv_line(path, [&](std::size_t line_no, const std::vector<std::string_view>& fields) {
        if (fields.size() != 4 || fields[0].empty() || fields[1].empty()) {
            parse_error(path, line_no, "expected 'query_id<TAB>passage_id<TAB>rank<TAB>score'");
        }
        std::size_t rank = 0;
        auto [rank_end, rank_ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), rank);
        if (rank_ec != std::errc{} || rank_end != fields[2].data() + fields[2].size()) {
            parse_error(path, line_no, "non-numeric rank '" + std::string(fields[2]) + "'");
        }
        double score = 0.0;
        auto [score_end, score_ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), score);
        if (score_ec != std::errc{} || score_end != fields[3].data() + fields[3].size() || !std::isfinite(score)) {
            parse_error(path, line_no, "non-numeric score '" + std::string(fields[3]) + "'");
        }

        const std::string query_id(fields[0]);
        if (run.empty() || run.back().query_id != query_id) {
            if (!run.empty()) {
                finished.insert(run.back().query_id);
            }
            if (finished.contains(query_id)) {
                parse_error(path, line_no, "entries of query " + query_id + " are not contiguous");
            }
            run.push_back({query_id, {}});
            current_ids.clear();
        }
        auto& list = run.back();
        if (rank != list.entries.size() + 1) {
            parse_error(path, line_no, "rank " + std::to_string(rank) + " of query " + query_id + ", expected " +
                                           std::to_string(list.entries.size() + 1));
        }
        if (!list.entries.empty() && score > list.entries.back().score) {
            parse_error(path, line_no, "score increases within query " + query_id);
        }
        std::string passage_id(fields[1]);
        if (!current_ids.insert(passage_id).second) {
            parse_error(path, line_no, "duplicate (query, passage) pair (" + query_id + ", " + passage_id + ")");
        }
        list.entries.push_back({std::move(passage_id), score});
    });
    return run;
}

std::string format_score(double score)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), score);
    if (ec != std::errc{}) {
        throw DataError("cannot format score");
    }
    return std::string(buf, end);
}

void write_run(const Run& run, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write run file: " + path.string());
    }
    for (const auto& list : run) {
        std::size_t rank = 0;
        for (const auto& entry : list.entries) {
            if (!std::isfinite(entry.score)) {
                throw DataError("non-finite score for (" + list.query_id + ", " + entry.passage_id + ")");
            }
            out << list.query_id << '\t' << entry.passage_id << '\t' << ++rank << '\t' << format_score(entry.score)
                << '\n';
        }
    }
    out.close();
    if (!out) {
        throw DataError("failed writing run file: " + path.string());
    }
}

void write_challenge_format(const Run& run, std::span<const std::string> query_order, const std::filesystem::path& path)
{
    std::map<std::string_view, const CandidateList*> by_query;
    for (const auto& list : run) {
        by_query.emplace(list.query_id, &list);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    for (const auto& query_id : query_order) {
        if (auto it = by_query.find(query_id); it != by_query.end()) {
            bool first = true;
            for (const auto& entry : it->second->entries) {
                out << (first ? "" : " ") << entry.passage_id << ':' << format_score(entry.score);
                first = false;
            }
        }
        out << '\n';
    }
    out.close();
    if (!out) {
        throw DataError("failed writing file: " + path.string());
    }
}

std::string report_to_json(const EvalReport& report, bool include_per_query)
{
    nlohmann::ordered_json doc;
    doc["metric"] = "ndcg@" + std::to_string(report.k);
    doc["k"] = report.k;
    doc["overall"] = report.overall;
    doc["queries"] = report.per_query.size();
    auto& domains = doc["domains"] = nlohmann::ordered_json::object();
    for (const auto& [domain, score] : report.per_domain) {
        domains[domain] = {{"ndcg", score.mean}, {"queries", score.queries}};
    }
    if (include_per_query) {
        auto& queries = doc["per_query"] = nlohmann::ordered_json::object();
        for (const auto& [query_id, value] : report.per_query) {
            queries[query_id] = value;
        }
    }
    return doc.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report)
{
    std::ostringstream out;
    const std::string metric = "NDCG@" + std::to_string(report.k);
    out << std::left << std::setw(24) << "domain" << std::right << std::setw(9) << "queries" << std::setw(11) << metric
        << '\n';
    out << std::fixed << std::setprecision(2);
    for (const auto& [domain, score] : report.per_domain) {
        out << std::left << std::setw(24) << domain << std::right << std::setw(9) << score.queries << std::setw(11)
            << 100.0 * score.mean << '\n';
    }
    out << std::left << std::setw(24) << "overall" << std::right << std::setw(9) << report.per_query.size()
        << std::setw(11) << 100.0 * report.overall << '\n';
    return out.str();
}

}  // namespace retrieval
