#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>

#include "ptkit/tokpack.hpp"

// Binary shard of packed batches, all integers little-endian.
//
//   file header (40 bytes)
//     magic         8 bytes  "PTKSHARD"
//     version       u32      kShardVersion
//     int_width     u32      bytes per token id (4)
//     stage_max_len u32
//     pad_id        i32
//     batch_count   u64
//     row_count     u64      rows over all batches
//   per batch
//     width         u32
//     rows          u32
//     token ids     rows*width * int_width bytes, row-major
//     mask          rows*width bytes, 0 or 1
namespace ptkit::tokpack {

inline constexpr std::array<char, 8> kShardMagic{'P', 'T', 'K', 'S', 'H', 'A', 'R', 'D'};
inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr std::uint32_t kShardIntWidth = 4;

struct ShardHeader {
    std::uint32_t version = kShardVersion;
    std::uint32_t int_width = kShardIntWidth;
    std::uint32_t stage_max_len = 0;
    TokenId pad_id = 0;
    std::uint64_t batch_count = 0;
    std::uint64_t row_count = 0;
};

class ShardWriter {
public:
    ShardWriter(const std::filesystem::path& path, std::uint32_t stage_max_len, TokenId pad_id);
    ~ShardWriter();

    ShardWriter(const ShardWriter&) = delete;
    ShardWriter& operator=(const ShardWriter&) = delete;

    void append(const PackedBatch& batch);
    // Rewrites the header with final counts. Called by the destructor if needed.
    void close();
    const ShardHeader& header() const noexcept { return header_; }

private:
    void write_header();

    std::filesystem::path path_;
    std::ofstream out_;
    ShardHeader header_;
};

class ShardReader {
public:
    // Throws DataError on bad magic, version or integer width.
    explicit ShardReader(const std::filesystem::path& path);

    const ShardHeader& header() const noexcept { return header_; }
    std::optional<PackedBatch> next();

private:
    std::filesystem::path path_;
    std::ifstream in_;
    ShardHeader header_;
    std::uint64_t batches_read_ = 0;
};

}  // namespace ptkit::tokpack
