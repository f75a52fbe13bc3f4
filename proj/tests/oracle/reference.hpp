#pragma once

// Brute-force reference implementations used as test oracles. They share no code
// with the library: scoring walks every document and counts terms directly.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Doc = std::vector<std::string>;

struct Bm25 {
    std::vector<Doc> docs;
    double k1 = 1.2;
    double b = 0.75;
    double epsilon = 0.25;

    std::map<std::string, double> idf;
    double avgdl = 0.0;

    Bm25(std::vector<Doc> corpus, double k1_ = 1.2, double b_ = 0.75, double eps = 0.25)
        : docs(std::move(corpus)), k1(k1_), b(b_), epsilon(eps)
    {
        const double n = static_cast<double>(docs.size());
        std::map<std::string, int> df;
        double total = 0;
        for (const auto& d : docs) {
            total += static_cast<double>(d.size());
            for (const auto& t : std::set<std::string>(d.begin(), d.end())) {
                ++df[t];
            }
        }
        avgdl = total / n;
        std::map<std::string, double> raw;
        double positive_sum = 0;
        int positive_count = 0;
        for (const auto& [t, f] : df) {
            raw[t] = std::log((n - f + 0.5) / (f + 0.5));
            if (raw[t] > 0) {
                positive_sum += raw[t];
                ++positive_count;
            }
        }
        const double floor = positive_count > 0 ? epsilon * positive_sum / positive_count : epsilon;
        for (const auto& [t, v] : raw) {
            idf[t] = v > 0 ? v : floor;
        }
    }

    double score(const Doc& query, std::size_t d) const
    {
        const auto& doc = docs[d];
        const double dl = static_cast<double>(doc.size());
        double s = 0;
        for (const auto& term : query) {
            const auto tf = static_cast<double>(std::count(doc.begin(), doc.end(), term));
            if (tf == 0) {
                continue;
            }
            s += idf.at(term) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
        }
        return s;
    }

    /// (doc, score) for every document scoring > 0, best first, ties by doc index.
    std::vector<std::pair<std::size_t, double>> rank(const Doc& query) const
    {
        std::vector<std::pair<std::size_t, double>> out;
        for (std::size_t d = 0; d < docs.size(); ++d) {
            if (double s = score(query, d); s > 0) {
                out.emplace_back(d, s);
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
        return out;
    }
};

/// NDCG with binary gains, computed from an explicit gain vector and its sorted ideal.
inline double ndcg(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k)
{
    if (relevant.empty()) {
        return 0.0;
    }
    std::vector<double> gains;
    for (const auto& id : ranked) {
        gains.push_back(relevant.count(id) ? 1.0 : 0.0);
    }
    auto dcg = [k](const std::vector<double>& g) {
        double sum = 0;
        for (std::size_t pos = 1; pos <= std::min(k, g.size()); ++pos) {
            sum += g[pos - 1] / std::log2(static_cast<double>(pos) + 1.0);
        }
        return sum;
    };
    std::vector<double> ideal(relevant.size(), 1.0);
    return dcg(gains) / dcg(ideal);
}

}  // namespace oracle
