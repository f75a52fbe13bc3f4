#pragma once

#include "retrieval/bm25_index.hpp"

#include <cstdint>
#include <filesystem>

namespace retrieval {

/// On-disk layout (all integers little-endian):
///
///   "PRBM25IX"  u32 version  u32 reserved
///   body: params, analyzer resources, passage table, term table, postings, idf
///   u32 crc32(body)  "XI52MBRP"
///
/// Strings are stored as u32 length followed by UTF-8 bytes. Sets and tables are
/// written in sorted order so that equal indexes produce identical files.
inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Writes to a sibling temporary file and renames it into place.
void save_index(const Bm25Index& index, const std::filesystem::path& path);

/// Throws DataError on a bad magic, unsupported version, truncation, checksum mismatch
/// or any violated index invariant.
Bm25Index load_index(const std::filesystem::path& path);

}  // namespace retrieval
