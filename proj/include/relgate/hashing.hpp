#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace relgate {

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's raw bytes. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

// 64-bit FNV-1a, used for shingle fingerprints (not security-relevant).
inline uint64_t fnv1a64(const char* data, size_t len) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer; keyed variants form the minhash family.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace relgate
