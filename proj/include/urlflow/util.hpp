#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urlflow {

// 64-bit FNV-1a. Stable across platforms; used for seeds and manifests,
// not for anything security related.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Per-URL generator seed. Depends only on (run_seed, url), never on
// scheduling order.
std::uint64_t url_seed(std::uint64_t run_seed, std::string_view url) noexcept;

std::string hex64(std::uint64_t v);

// Hash of a whole file's bytes, rendered as "fnv1a64:<hex>".
std::string file_digest(const std::filesystem::path& path);

// Splits one CSV record. Handles double-quoted fields with "" escapes;
// records spanning several lines are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& os, std::span<const std::string> fields);

// 17 significant digits, enough to round-trip any double exactly.
std::string format_exact(double v);

// Fixed-point with the given number of decimals.
std::string format_fixed(double v, int decimals);

std::string_view trim(std::string_view s) noexcept;

}  // namespace urlflow
