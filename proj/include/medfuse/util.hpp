#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace medfuse {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a 64-bit. Used for artifact/vocab fingerprints in manifests and
// checkpoints; not cryptographic.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v);

// Whole-file read/write. Throws DataError on I/O failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::uint64_t hash_file(const std::string& path);

// Days since 2018-01-01 -> "YYYY-MM-DD" (proleptic Gregorian).
std::string date_from_day(long day);

// Parses a full decimal string (strtod, entire string consumed, finite).
// Returns false on any violation.
bool parse_decimal(const std::string& raw, double& out);

}  // namespace medfuse
