#pragma once
// Small shared utilities: number formatting, hashing, atomic writes,
// deterministic parallel loops.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace trajmeta {

// Shortest round-trip decimal representation; locale-independent.
std::string format_double(double v);

double parse_double(std::string_view s);  // throws DataError on junk
long long parse_int(std::string_view s);

// FNV-1a 64 over raw bytes; used for provenance manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string file_hash_hex(const std::filesystem::path&);

std::string read_file(const std::filesystem::path&);

// Writes to "<path>.partial" then renames; a failed stage leaves no final file.
void atomic_write(const std::filesystem::path&, std::string_view content);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Chunked by index so the
// result layout never depends on scheduling; callers write to disjoint slots.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace trajmeta
