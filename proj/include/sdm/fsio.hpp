#ifndef SDM_FSIO_HPP
#define SDM_FSIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include "sdm/bytes.hpp"

namespace sdm {

bool path_exists(const std::filesystem::path& p);
std::uint64_t file_size_of(const std::filesystem::path& p);

Bytes read_file(const std::filesystem::path& p);

/// Reads exactly [offset, offset+length); a short file is a BoundsError.
Bytes read_file_range(const std::filesystem::path& p, std::uint64_t offset,
                      std::uint64_t length);

/// Creates or truncates.
void write_file(const std::filesystem::path& p, ByteSpan data);

/// Positioned write; creates the file if absent and extends it as needed,
/// never truncates. Safe for concurrent writers on disjoint ranges.
void write_file_range(const std::filesystem::path& p, std::uint64_t offset, ByteSpan data);

/// Extends (never shrinks) the file to at least `size` bytes.
void ensure_file_size(const std::filesystem::path& p, std::uint64_t size);

void sync_file(const std::filesystem::path& p);

std::string read_text_file(const std::filesystem::path& p);

/// Write-to-temp then rename, so readers never observe a half-written file.
void write_text_file_atomic(const std::filesystem::path& p, const std::string& text);

} // namespace sdm

#endif
