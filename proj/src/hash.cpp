#include "ptkit/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace ptkit {

Sha256 sha256(std::string_view data) {
    Sha256 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
        throw std::runtime_error("EVP_Digest(sha256) failed");
    }
    return out;
}

std::string to_hex(const Sha256& digest, std::size_t bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes * 2);
    for (std::size_t i = 0; i < bytes && i < digest.size(); ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0F]);
    }
    return out;
}

namespace {

std::uint64_t load_be64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | p[i];
    }
    return v;
}

}  // namespace

Digest128 digest128(std::string_view data) {
    const Sha256 d = sha256(data);
    return {load_be64(d.data()), load_be64(d.data() + 8)};
}

double unit_interval(std::string_view data) {
    const Sha256 d = sha256(data);
    // 53 high bits -> exactly representable double in [0, 1).
    return static_cast<double>(load_be64(d.data()) >> 11) * 0x1.0p-53;
}

}  // namespace ptkit
