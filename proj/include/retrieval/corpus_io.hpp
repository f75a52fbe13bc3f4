#pragma once

#include "retrieval/types.hpp"

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace retrieval {

enum class RecordFormat { tsv, jsonl };

/// `.jsonl`, `.jl`, `.ndjson` and `.json` are JSON lines; anything else is TSV.
RecordFormat detect_format(const std::filesystem::path& path);

/// Streams `passage_id \t text` or `{"id": ..., "text": ...}` records in batches.
/// Throws DataError with the line number on malformed records.
void read_passages(const std::filesystem::path& path, std::size_t batch_size,
                   const std::function<void(std::vector<Passage>&&)>& sink);

std::vector<Passage> load_passages(const std::filesystem::path& path);

/// Queries use the passage layout plus an optional domain: a third TSV column or a
/// "domain" JSON field. Duplicate query ids are rejected.
std::vector<Query> load_queries(const std::filesystem::path& path);

/// Passage texts by id, for second-stage scoring and training-pair hydration.
class PassageStore {
public:
    PassageStore() = default;
    explicit PassageStore(std::vector<Passage> passages);
    PassageStore(const PassageStore&) = delete;
    PassageStore& operator=(const PassageStore&) = delete;
    PassageStore(PassageStore&&) = default;
    PassageStore& operator=(PassageStore&&) = default;

    /// Loads the corpus; when `only` is given, passages outside the set are skipped.
    static PassageStore load(const std::filesystem::path& path,
                             const std::unordered_set<std::string>* only = nullptr);

    const std::string* find(std::string_view id) const;
    /// Throws DataError when the id is unknown.
    const std::string& text(std::string_view id) const;
    std::size_t size() const noexcept { return passages_.size(); }

private:
    void add(Passage passage);

    // deque keeps element addresses stable, the lookup keys view into it
    std::deque<Passage> passages_;
    std::unordered_map<std::string_view, const Passage*> lookup_;
};

}  // namespace retrieval
