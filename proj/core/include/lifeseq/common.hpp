#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lifeseq {

// All numerics run in double precision; checkpoints store the same width so a
// save/load round trip reproduces forward passes bit for bit.
using real = double;

using Vec = std::vector<real>;

// Raised when user-supplied configuration or data violates a precondition.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a computation degenerates at runtime (NaN loss, collapsed
// attention normalizer, corrupt checkpoint, ...).
class ComputeError : public std::runtime_error {
public:
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// FNV-1a over bytes; used for vocab/config fingerprints in file headers.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

}  // namespace lifeseq
