#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace ptkit {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view data);
std::string to_hex(const Sha256& digest, std::size_t bytes = 32);

inline std::string sha256_hex(std::string_view data, std::size_t bytes = 32) {
    return to_hex(sha256(data), bytes);
}

// First 128 bits of SHA-256, for hash-set membership.
struct Digest128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    friend bool operator==(const Digest128&, const Digest128&) = default;
};

Digest128 digest128(std::string_view data);

struct Digest128Hash {
    std::size_t operator()(const Digest128& d) const noexcept { return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9E3779B97F4A7C15ULL)); }
};

// Maps a string to a deterministic double in [0, 1).
double unit_interval(std::string_view data);

}  // namespace ptkit
