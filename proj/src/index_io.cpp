#include "retrieval/index_io.hpp"

#include "retrieval/error.hpp"

#include <boost/crc.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

namespace retrieval {

static_assert(std::endian::native == std::endian::little, "index files are written in host order");

namespace {

constexpr std::string_view kMagic = "PRBM25IX";
constexpr std::string_view kEndMagic = "XI52MBRP";
constexpr std::size_t kHeaderSize = 8 + 4 + 4;
constexpr std::size_t kTrailerSize = 4 + 8;

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path)
    {
        if (!out_) {
            throw DataError("cannot open index file for writing: " + path.string());
        }
    }

    void raw(const void* data, std::size_t size, bool checksum = true)
    {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (checksum) {
            crc_.process_bytes(data, size);
        }
    }

    template <typename T>
    void value(T v)
    {
        static_assert(std::is_trivially_copyable_v<T>);
        raw(&v, sizeof(T));
    }

    template <typename T>
    void array(std::span<const T> values)
    {
        static_assert(std::is_trivially_copyable_v<T>);
        value<std::uint64_t>(values.size());
        raw(values.data(), values.size_bytes());
    }

    void string(std::string_view s)
    {
        if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw DataError("string too long for index file");
        }
        value<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    template <typename Range>
    void strings(const Range& values)
    {
        value<std::uint64_t>(std::size(values));
        for (const auto& s : values) {
            string(s);
        }
    }

    std::uint32_t checksum() const { return crc_.checksum(); }

    void close()
    {
        out_.close();
        if (!out_) {
            throw DataError("failed writing index file: " + path_.string());
        }
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    boost::crc_32_type crc_;
};

class Reader {
public:
    Reader(std::span<const char> data, const std::filesystem::path& path) : data_(data), path_(path) {}

    template <typename T>
    T value()
    {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }

    template <typename T>
    std::vector<T> array()
    {
        const auto n = count(sizeof(T));
        std::vector<T> out(n);
        if (n > 0) {
            std::memcpy(out.data(), take(n * sizeof(T)), n * sizeof(T));
        }
        return out;
    }

    std::string string()
    {
        const auto n = value<std::uint32_t>();
        const char* p = take(n);
        return std::string(p, n);
    }

    std::vector<std::string> strings()
    {
        // every string carries at least its 4-byte length
        const auto n = count(4);
        std::vector<std::string> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(string());
        }
        return out;
    }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::size_t count(std::size_t min_element_size)
    {
        const auto n = value<std::uint64_t>();
        if (min_element_size > 0 && n > remaining() / min_element_size) {
            fail("element count exceeds file size");
        }
        return static_cast<std::size_t>(n);
    }

    const char* take(std::size_t n)
    {
        if (n > remaining()) {
            fail("unexpected end of data");
        }
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw DataError("corrupt index file " + path_.string() + ": " + what);
    }

    std::span<const char> data_;
    std::size_t pos_ = 0;
    const std::filesystem::path& path_;
};

template <typename T>
std::vector<std::pair<T, T>> sorted_pairs(const std::unordered_map<T, T>& table)
{
    std::vector<std::pair<T, T>> out(table.begin(), table.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

void save_index(const Bm25Index& index, const std::filesystem::path& path)
{
    const auto& parts = index.parts();
    auto tmp = path;
    tmp += ".tmp";
    {
        Writer w(tmp);
        w.raw(kMagic.data(), kMagic.size(), false);
        const std::uint32_t header[2] = {kIndexFormatVersion, 0};
        w.raw(header, sizeof(header), false);

        w.value(parts.params.k1);
        w.value(parts.params.b);
        w.value(parts.params.epsilon);

        const auto& analyzer = parts.analyzer;
        w.value<std::uint8_t>(analyzer.lowercase ? 1 : 0);
        w.value<std::uint8_t>(static_cast<std::uint8_t>(analyzer.stemmer.kind()));
        std::vector<std::string> stopwords(analyzer.stopwords.begin(), analyzer.stopwords.end());
        std::sort(stopwords.begin(), stopwords.end());
        w.strings(stopwords);
        const auto table = sorted_pairs(analyzer.stemmer.table());
        w.value<std::uint64_t>(table.size());
        for (const auto& [surface, stem] : table) {
            w.string(surface);
            w.string(stem);
        }
        const auto& rules = analyzer.stemmer.rules();
        w.value<std::uint64_t>(rules.size());
        for (const auto& rule : rules) {
            w.string(rule.suffix);
            w.string(rule.replacement);
        }

        w.strings(parts.passage_ids);
        w.array<std::uint32_t>(parts.doc_lengths);
        w.strings(parts.terms);
        w.array<std::uint64_t>(parts.offsets);
        w.array<std::uint32_t>(parts.posting_ordinals);
        w.array<std::uint32_t>(parts.posting_freqs);
        w.array<double>(parts.idf);

        const std::uint32_t crc = w.checksum();
        w.raw(&crc, sizeof(crc), false);
        w.raw(kEndMagic.data(), kEndMagic.size(), false);
        w.close();
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw DataError("cannot move index into place at " + path.string() + ": " + ec.message());
    }
}

Bm25Index load_index(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw DataError("cannot read index file: " + path.string());
    }
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<char> data(size);
    in.seekg(0);
    if (size > 0 && !in.read(data.data(), static_cast<std::streamsize>(size))) {
        throw DataError("error reading index file: " + path.string());
    }

    if (size < kMagic.size() || std::string_view(data.data(), kMagic.size()) != kMagic) {
        throw DataError("not an index file (bad magic): " + path.string());
    }
    if (size < kHeaderSize) {
        throw DataError("truncated index file: " + path.string());
    }
    std::uint32_t version = 0;
    std::memcpy(&version, data.data() + kMagic.size(), sizeof(version));
    if (version != kIndexFormatVersion) {
        throw DataError("unsupported index format version " + std::to_string(version) + " in " + path.string() +
                        " (expected " + std::to_string(kIndexFormatVersion) + ")");
    }
    if (size < kHeaderSize + kTrailerSize ||
        std::string_view(data.data() + size - kEndMagic.size(), kEndMagic.size()) != kEndMagic) {
        throw DataError("truncated index file: " + path.string());
    }

    const std::span<const char> body(data.data() + kHeaderSize, size - kHeaderSize - kTrailerSize);
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, data.data() + size - kTrailerSize, sizeof(stored_crc));
    boost::crc_32_type crc;
    crc.process_bytes(body.data(), body.size());
    if (crc.checksum() != stored_crc) {
        throw DataError("index file checksum mismatch: " + path.string());
    }

    Reader r(body, path);
    Bm25Index::Parts parts;
    parts.params.k1 = r.value<double>();
    parts.params.b = r.value<double>();
    parts.params.epsilon = r.value<double>();

    parts.analyzer.lowercase = r.value<std::uint8_t>() != 0;
    const auto kind = r.value<std::uint8_t>();
    if (kind > static_cast<std::uint8_t>(StemmerKind::dictionary)) {
        throw DataError("corrupt index file " + path.string() + ": unknown stemmer kind");
    }
    for (auto& word : r.strings()) {
        parts.analyzer.stopwords.insert(std::move(word));
    }
    const auto table_size = r.value<std::uint64_t>();
    StemTable table;
    for (std::uint64_t i = 0; i < table_size; ++i) {
        auto surface = r.string();
        table.emplace(std::move(surface), r.string());
    }
    const auto rule_count = r.value<std::uint64_t>();
    std::vector<SuffixRule> rules;
    for (std::uint64_t i = 0; i < rule_count; ++i) {
        auto suffix = r.string();
        rules.push_back({std::move(suffix), r.string()});
    }
    switch (static_cast<StemmerKind>(kind)) {
    case StemmerKind::identity:
        break;
    case StemmerKind::dictionary:
        parts.analyzer.stemmer = Stemmer::dictionary(std::move(table));
        break;
    case StemmerKind::suffix_rules:
        parts.analyzer.stemmer = Stemmer::suffix_rules(std::move(rules));
        break;
    }

    parts.passage_ids = r.strings();
    parts.doc_lengths = r.array<std::uint32_t>();
    parts.terms = r.strings();
    parts.offsets = r.array<std::uint64_t>();
    parts.posting_ordinals = r.array<std::uint32_t>();
    parts.posting_freqs = r.array<std::uint32_t>();
    parts.idf = r.array<double>();
    if (r.remaining() != 0) {
        throw DataError("corrupt index file " + path.string() + ": trailing bytes");
    }
    data = {};
    return Bm25Index(std::move(parts));
}

}  // namespace retrieval
