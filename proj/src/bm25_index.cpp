#include "retrieval/bm25_index.hpp"

#include "retrieval/error.hpp"
#include "retrieval/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace retrieval {

namespace {

constexpr std::size_t kAnalyzeBatch = 1 << 14;

/// idf per term from document frequencies, applying the epsilon floor to
/// non-positive values.
std::vector<double> compute_idf(std::size_t num_docs, std::span<const std::uint64_t> offsets, double epsilon)
{
    const std::size_t num_terms = offsets.empty() ? 0 : offsets.size() - 1;
    std::vector<double> idf(num_terms);
    double positive_sum = 0.0;
    std::size_t positive_count = 0;
    for (std::size_t t = 0; t < num_terms; ++t) {
        idf[t] = raw_idf(num_docs, offsets[t + 1] - offsets[t]);
        if (idf[t] > 0.0) {
            positive_sum += idf[t];
            ++positive_count;
        }
    }
    // With no positive IDF at all (e.g. a one-passage corpus) the floor falls back to
    // epsilon itself so that matching passages still score above zero.
    const double floor = positive_count > 0 ? epsilon * (positive_sum / static_cast<double>(positive_count)) : epsilon;
    for (auto& value : idf) {
        if (value <= 0.0) {
            value = floor;
        }
    }
    return idf;
}

struct Scratch {
    std::vector<double> acc;
    std::vector<std::uint32_t> stamp;
    std::vector<std::uint32_t> touched;
    std::uint32_t generation = 0;

    void prepare(std::size_t n)
    {
        if (acc.size() < n) {
            acc.resize(n, 0.0);
            stamp.resize(n, 0);
        }
        touched.clear();
        if (++generation == 0) {
            std::fill(stamp.begin(), stamp.end(), 0);
            generation = 1;
        }
    }
};

bool better(const Hit& a, const Hit& b)
{
    return a.score > b.score || (a.score == b.score && a.ordinal < b.ordinal);
}

}  // namespace

void Bm25Params::validate() const
{
    if (!(k1 >= 0.0) || !std::isfinite(k1)) {
        throw ConfigError("bm25 k1 must be a finite value >= 0, got " + std::to_string(k1));
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw ConfigError("bm25 b must lie in [0, 1], got " + std::to_string(b));
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("bm25 epsilon must be a finite value >= 0, got " + std::to_string(epsilon));
    }
}

double raw_idf(std::uint64_t num_docs, std::uint64_t doc_freq)
{
    const auto n = static_cast<double>(num_docs);
    const auto df = static_cast<double>(doc_freq);
    return std::log((n - df + 0.5) / (df + 0.5));
}

Bm25Index::Bm25Index(Parts parts) : parts_(std::move(parts)), analyzer_(parts_.analyzer)
{
    check_and_build_lookups();

    const std::size_t n = num_docs();
    std::uint64_t total = 0;
    for (auto len : parts_.doc_lengths) {
        total += len;
    }
    avgdl_ = static_cast<double>(total) / static_cast<double>(n);

    const double k1 = parts_.params.k1;
    const double b = parts_.params.b;
    length_norm_.resize(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double rel = avgdl_ > 0.0 ? static_cast<double>(parts_.doc_lengths[d]) / avgdl_ : 0.0;
        length_norm_[d] = k1 * (1.0 - b + b * rel);
    }
}

void Bm25Index::check_and_build_lookups()
{
    parts_.params.validate();
    const std::size_t n = parts_.passage_ids.size();
    if (n == 0) {
        throw DataError("index has no passages");
    }
    if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw DataError("index has too many passages");
    }
    if (parts_.doc_lengths.size() != n) {
        throw DataError("index doc length table does not match passage count");
    }
    const std::size_t v = parts_.terms.size();
    if (parts_.offsets.size() != v + 1 || parts_.idf.size() != v) {
        throw DataError("index term tables are inconsistent");
    }
    if (parts_.offsets.front() != 0 || parts_.offsets.back() != parts_.posting_ordinals.size() ||
        parts_.posting_freqs.size() != parts_.posting_ordinals.size()) {
        throw DataError("index posting offsets are inconsistent");
    }

    id_lookup_.reserve(n);
    for (std::uint32_t d = 0; d < n; ++d) {
        if (!id_lookup_.emplace(parts_.passage_ids[d], d).second) {
            throw DataError("duplicate passage id: " + parts_.passage_ids[d]);
        }
    }
    term_lookup_.reserve(v);

    std::vector<std::uint64_t> length_check(n, 0);
    for (std::uint32_t t = 0; t < v; ++t) {
        if (parts_.terms[t].empty() || !term_lookup_.emplace(parts_.terms[t], t).second) {
            throw DataError("empty or duplicate index term at position " + std::to_string(t));
        }
        const auto begin = parts_.offsets[t];
        const auto end = parts_.offsets[t + 1];
        if (end < begin) {
            throw DataError("index posting offsets are not monotone");
        }
        for (auto p = begin; p < end; ++p) {
            const auto ordinal = parts_.posting_ordinals[p];
            if (ordinal >= n || (p > begin && parts_.posting_ordinals[p - 1] >= ordinal)) {
                throw DataError("postings of term '" + parts_.terms[t] + "' are out of range or unsorted");
            }
            if (parts_.posting_freqs[p] == 0) {
                throw DataError("zero term frequency in postings of term '" + parts_.terms[t] + "'");
            }
            length_check[ordinal] += parts_.posting_freqs[p];
        }
    }
    for (std::size_t d = 0; d < n; ++d) {
        if (length_check[d] != parts_.doc_lengths[d]) {
            throw DataError("doc length of passage " + parts_.passage_ids[d] + " disagrees with its postings");
        }
    }
    const auto expected_idf = compute_idf(n, parts_.offsets, parts_.params.epsilon);
    if (expected_idf != parts_.idf) {
        throw DataError("index idf table does not match document frequencies");
    }
}

std::optional<std::uint32_t> Bm25Index::ordinal_of(std::string_view passage_id) const
{
    if (auto it = id_lookup_.find(std::string(passage_id)); it != id_lookup_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::optional<std::uint32_t> Bm25Index::term_id(std::string_view term) const
{
    if (auto it = term_lookup_.find(std::string(term)); it != term_lookup_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::uint32_t Bm25Index::doc_freq(std::uint32_t id) const
{
    return static_cast<std::uint32_t>(parts_.offsets.at(id + 1) - parts_.offsets.at(id));
}

double Bm25Index::idf(std::string_view term) const
{
    auto id = term_id(term);
    return id ? parts_.idf[*id] : 0.0;
}

double Bm25Index::score(std::span<const std::string> query_tokens, std::uint32_t ordinal) const
{
    if (ordinal >= num_docs()) {
        throw DataError("passage ordinal out of range: " + std::to_string(ordinal));
    }
    const double k1 = parts_.params.k1;
    const double norm = length_norm_[ordinal];
    double total = 0.0;
    for (const auto& token : query_tokens) {
        auto id = term_id(token);
        if (!id) {
            continue;
        }
        const auto begin = parts_.posting_ordinals.begin() + static_cast<std::ptrdiff_t>(parts_.offsets[*id]);
        const auto end = parts_.posting_ordinals.begin() + static_cast<std::ptrdiff_t>(parts_.offsets[*id + 1]);
        auto it = std::lower_bound(begin, end, ordinal);
        if (it == end || *it != ordinal) {
            continue;
        }
        const auto tf = static_cast<double>(parts_.posting_freqs[static_cast<std::size_t>(it - parts_.posting_ordinals.begin())]);
        total += parts_.idf[*id] * (tf * (k1 + 1.0)) / (tf + norm);
    }
    return total;
}

std::vector<Hit> Bm25Index::top_k(std::span<const std::string> query_tokens, std::size_t k) const
{
    std::vector<Hit> hits;
    if (k == 0) {
        return hits;
    }
    thread_local Scratch scratch;
    scratch.prepare(num_docs());

    const double k1 = parts_.params.k1;
    for (const auto& token : query_tokens) {
        auto id = term_id(token);
        if (!id) {
            continue;
        }
        const double idf = parts_.idf[*id];
        for (auto p = parts_.offsets[*id]; p < parts_.offsets[*id + 1]; ++p) {
            const auto d = parts_.posting_ordinals[p];
            const auto tf = static_cast<double>(parts_.posting_freqs[p]);
            if (scratch.stamp[d] != scratch.generation) {
                scratch.stamp[d] = scratch.generation;
                scratch.acc[d] = 0.0;
                scratch.touched.push_back(d);
            }
            scratch.acc[d] += idf * (tf * (k1 + 1.0)) / (tf + length_norm_[d]);
        }
    }

    if (k >= scratch.touched.size()) {
        hits.reserve(scratch.touched.size());
        for (auto d : scratch.touched) {
            if (scratch.acc[d] > 0.0) {
                hits.push_back({d, scratch.acc[d]});
            }
        }
        std::sort(hits.begin(), hits.end(), better);
        return hits;
    }

    // bounded heap whose top is the worst hit kept so far
    std::priority_queue<Hit, std::vector<Hit>, decltype(&better)> heap(better);
    for (auto d : scratch.touched) {
        const Hit hit{d, scratch.acc[d]};
        if (!(hit.score > 0.0)) {
            continue;
        }
        if (heap.size() < k) {
            heap.push(hit);
        } else if (better(hit, heap.top())) {
            heap.pop();
            heap.push(hit);
        }
    }
    hits.resize(heap.size());
    for (auto i = hits.size(); i > 0; --i) {
        hits[i - 1] = heap.top();
        heap.pop();
    }
    return hits;
}

CandidateList Bm25Index::retrieve_topk(const std::string& query_id, std::string_view query_text, std::size_t k) const
{
    const auto tokens = analyzer_.analyze(query_text);
    return retrieve_topk(query_id, tokens, k);
}

CandidateList Bm25Index::retrieve_topk(const std::string& query_id, std::span<const std::string> query_tokens,
                                       std::size_t k) const
{
    CandidateList out;
    out.query_id = query_id;
    for (const auto& hit : top_k(query_tokens, k)) {
        out.entries.push_back({parts_.passage_ids[hit.ordinal], hit.score});
    }
    return out;
}

Bm25IndexBuilder::Bm25IndexBuilder(Analyzer analyzer, Bm25Params params, unsigned threads)
    : analyzer_(std::move(analyzer)), params_(params), threads_(std::max(1U, threads))
{
    params_.validate();
}

void Bm25IndexBuilder::add(std::span<const Passage> passages)
{
    std::vector<TokenSeq> tokens;
    for (std::size_t start = 0; start < passages.size(); start += kAnalyzeBatch) {
        const auto batch = passages.subspan(start, std::min(kAnalyzeBatch, passages.size() - start));
        tokens.assign(batch.size(), {});
        parallel_for(batch.size(), threads_, [&](std::size_t i) { tokens[i] = analyzer_.analyze(batch[i].text); });
        for (std::size_t i = 0; i < batch.size(); ++i) {
            add_tokens(batch[i].id, tokens[i]);
        }
    }
}

void Bm25IndexBuilder::add_tokens(std::string passage_id, std::span<const std::string> tokens)
{
    if (passage_id.empty()) {
        throw DataError("empty passage id at position " + std::to_string(passage_ids_.size()));
    }
    if (passage_ids_.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw DataError("corpus exceeds the maximum passage count");
    }
    const auto ordinal = static_cast<std::uint32_t>(passage_ids_.size());
    if (!seen_ids_.emplace(passage_id, ordinal).second) {
        throw DataError("duplicate passage id: " + passage_id);
    }
    if (tokens.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw DataError("passage too long: " + passage_id);
    }

    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& token : tokens) {
        auto [it, inserted] = vocab_.try_emplace(token, static_cast<std::uint32_t>(vocab_terms_.size()));
        if (inserted) {
            vocab_terms_.push_back(token);
        }
        ids.push_back(it->second);
    }
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j < ids.size() && ids[j] == ids[i]) {
            ++j;
        }
        doc_terms_.push_back(ids[i]);
        doc_freqs_.push_back(static_cast<std::uint32_t>(j - i));
        i = j;
    }
    doc_offsets_.push_back(doc_terms_.size());
    doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    passage_ids_.push_back(std::move(passage_id));
}

Bm25Index Bm25IndexBuilder::finish() &&
{
    if (passage_ids_.empty()) {
        throw DataError("cannot build an index from an empty corpus");
    }
    const std::size_t v = vocab_terms_.size();

    // renumber terms in lexicographic order so the layout is canonical
    std::vector<std::uint32_t> order(v);
    std::iota(order.begin(), order.end(), 0U);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return vocab_terms_[a] < vocab_terms_[b]; });
    std::vector<std::uint32_t> remap(v);
    for (std::uint32_t i = 0; i < v; ++i) {
        remap[order[i]] = i;
    }

    Bm25Index::Parts parts;
    parts.params = params_;
    parts.analyzer = analyzer_.resources();
    parts.terms.reserve(v);
    for (auto old : order) {
        parts.terms.push_back(std::move(vocab_terms_[old]));
    }
    vocab_.clear();

    parts.offsets.assign(v + 1, 0);
    for (auto t : doc_terms_) {
        ++parts.offsets[remap[t] + 1];
    }
    std::partial_sum(parts.offsets.begin(), parts.offsets.end(), parts.offsets.begin());

    parts.posting_ordinals.resize(doc_terms_.size());
    parts.posting_freqs.resize(doc_terms_.size());
    std::vector<std::uint64_t> cursor(parts.offsets.begin(), parts.offsets.end() - 1);
    const std::size_t n = passage_ids_.size();
    for (std::size_t d = 0; d < n; ++d) {
        for (auto p = doc_offsets_[d]; p < doc_offsets_[d + 1]; ++p) {
            const auto slot = cursor[remap[doc_terms_[p]]]++;
            parts.posting_ordinals[slot] = static_cast<std::uint32_t>(d);
            parts.posting_freqs[slot] = doc_freqs_[p];
        }
    }
    doc_terms_ = {};
    doc_freqs_ = {};
    doc_offsets_ = {};

    parts.idf = compute_idf(n, parts.offsets, params_.epsilon);
    parts.passage_ids = std::move(passage_ids_);
    parts.doc_lengths = std::move(doc_lengths_);
    seen_ids_.clear();
    return Bm25Index(std::move(parts));
}

Bm25Index build_index(std::span<const Passage> corpus, const Analyzer& analyzer, const Bm25Params& params,
                      unsigned threads)
{
    Bm25IndexBuilder builder(analyzer, params, threads);
    builder.add(corpus);
    return std::move(builder).finish();
}

}  // namespace retrieval
