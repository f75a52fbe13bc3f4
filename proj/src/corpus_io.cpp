#include "retrieval/corpus_io.hpp"

#include "retrieval/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace retrieval {

namespace {

std::optional<std::string> json_id(const nlohmann::json& value)
{
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return value.dump();
    }
    return std::nullopt;
}

struct Record {
    std::string id;
    std::string text;
    std::string domain;
};

/// Calls fn(record) for every non-empty line of a TSV or JSON-lines file.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, bool allow_domain, Fn&& fn)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot read file: " + path.string());
    }
    const auto format = detect_format(path);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.erase(0, 3);
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        Record record;
        if (format == RecordFormat::jsonl) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                fail(std::string("invalid JSON: ") + e.what());
            }
            if (!doc.is_object() || !doc.contains("id") || !doc.contains("text") || !doc["text"].is_string()) {
                fail("expected an object with \"id\" and a string \"text\"");
            }
            auto id = json_id(doc["id"]);
            if (!id) {
                fail("id must be a string or an integer");
            }
            record.id = std::move(*id);
            record.text = doc["text"].get<std::string>();
            if (allow_domain && doc.contains("domain")) {
                if (!doc["domain"].is_string()) {
                    fail("domain must be a string");
                }
                record.domain = doc["domain"].get<std::string>();
            }
        } else {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                fail("expected 'id<TAB>text'");
            }
            record.id = line.substr(0, tab);
            record.text = line.substr(tab + 1);
            if (allow_domain) {
                if (const auto second = record.text.rfind('\t'); second != std::string::npos) {
                    record.domain = record.text.substr(second + 1);
                    record.text.resize(second);
                }
            }
        }
        if (record.id.empty()) {
            fail("empty id");
        }
        fn(std::move(record));
    }
    if (in.bad()) {
        throw DataError("error while reading " + path.string());
    }
}

}  // namespace

RecordFormat detect_format(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".jsonl" || ext == ".jl" || ext == ".ndjson" || ext == ".json") {
        return RecordFormat::jsonl;
    }
    return RecordFormat::tsv;
}

void read_passages(const std::filesystem::path& path, std::size_t batch_size,
                   const std::function<void(std::vector<Passage>&&)>& sink)
{
    batch_size = std::max<std::size_t>(1, batch_size);
    std::vector<Passage> batch;
    for_each_record(path, false, [&](Record&& record) {
        batch.push_back({std::move(record.id), std::move(record.text)});
        if (batch.size() >= batch_size) {
            sink(std::move(batch));
            batch.clear();
        }
    });
    if (!batch.empty()) {
        sink(std::move(batch));
    }
}

std::vector<Passage> load_passages(const std::filesystem::path& path)
{
    std::vector<Passage> out;
    for_each_record(path, false, [&](Record&& record) { out.push_back({std::move(record.id), std::move(record.text)}); });
    return out;
}

std::vector<Query> load_queries(const std::filesystem::path& path)
{
    std::vector<Query> out;
    std::unordered_set<std::string> seen;
    for_each_record(path, true, [&](Record&& record) {
        if (!seen.insert(record.id).second) {
            throw DataError(path.string() + ": duplicate query id: " + record.id);
        }
        out.push_back({std::move(record.id), std::move(record.text), std::move(record.domain)});
    });
    return out;
}

PassageStore::PassageStore(std::vector<Passage> passages)
{
    for (auto& p : passages) {
        add(std::move(p));
    }
}

PassageStore PassageStore::load(const std::filesystem::path& path, const std::unordered_set<std::string>* only)
{
    PassageStore store;
    for_each_record(path, false, [&](Record&& record) {
        if (only == nullptr || only->contains(record.id)) {
            store.add({std::move(record.id), std::move(record.text)});
        }
    });
    return store;
}

void PassageStore::add(Passage passage)
{
    if (lookup_.contains(passage.id)) {
        throw DataError("duplicate passage id: " + passage.id);
    }
    const auto& stored = passages_.emplace_back(std::move(passage));
    lookup_.emplace(stored.id, &stored);
}

const std::string* PassageStore::find(std::string_view id) const
{
    if (auto it = lookup_.find(id); it != lookup_.end()) {
        return &it->second->text;
    }
    return nullptr;
}

const std::string& PassageStore::text(std::string_view id) const
{
    if (const auto* t = find(id)) {
        return *t;
    }
    throw DataError("unknown passage id: " + std::string(id));
}

}  // namespace retrieval
