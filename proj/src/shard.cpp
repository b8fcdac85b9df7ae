#include "ptkit/shard.hpp"

#include <cstring>
#include <vector>

#include "ptkit/error.hpp"

namespace ptkit::tokpack {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    std::array<char, sizeof(T)> buf{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<char>(u & 0xFF);
        u = static_cast<U>(u >> 8);
    }
    out.write(buf.data(), buf.size());
}

template <typename T>
bool get_le(std::istream& in, T& value) {
    using U = std::make_unsigned_t<T>;
    std::array<unsigned char, sizeof(T)> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
        return false;
    }
    U u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        u = static_cast<U>((u << 8) | buf[i]);
    }
    value = static_cast<T>(u);
    return true;
}

}  // namespace

ShardWriter::ShardWriter(const std::filesystem::path& path, std::uint32_t stage_max_len, TokenId pad_id)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw IoError("cannot open shard for writing: " + path.string());
    }
    header_.stage_max_len = stage_max_len;
    header_.pad_id = pad_id;
    write_header();
}

ShardWriter::~ShardWriter() {
    if (out_.is_open()) {
        try {
            close();
        } catch (...) {
        }
    }
}

void ShardWriter::write_header() {
    out_.write(kShardMagic.data(), kShardMagic.size());
    put_le(out_, header_.version);
    put_le(out_, header_.int_width);
    put_le(out_, header_.stage_max_len);
    put_le(out_, header_.pad_id);
    put_le(out_, header_.batch_count);
    put_le(out_, header_.row_count);
}

void ShardWriter::append(const PackedBatch& batch) {
    put_le(out_, static_cast<std::uint32_t>(batch.width));
    put_le(out_, static_cast<std::uint32_t>(batch.rows));
    std::vector<char> ids(batch.token_ids.size() * kShardIntWidth);
    for (std::size_t i = 0; i < batch.token_ids.size(); ++i) {
        auto u = static_cast<std::uint32_t>(batch.token_ids[i]);
        for (std::size_t b = 0; b < kShardIntWidth; ++b) {
            ids[i * kShardIntWidth + b] = static_cast<char>(u & 0xFF);
            u >>= 8;
        }
    }
    out_.write(ids.data(), static_cast<std::streamsize>(ids.size()));
    out_.write(reinterpret_cast<const char*>(batch.attention_mask.data()),
               static_cast<std::streamsize>(batch.attention_mask.size()));
    if (!out_) {
        throw IoError("shard write failed: " + path_.string());
    }
    ++header_.batch_count;
    header_.row_count += batch.rows;
}

void ShardWriter::close() {
    if (!out_.is_open()) {
        return;
    }
    out_.seekp(0);
    write_header();
    out_.flush();
    const bool ok = static_cast<bool>(out_);
    out_.close();
    if (!ok) {
        throw IoError("shard finalize failed: " + path_.string());
    }
}

ShardReader::ShardReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) {
        throw IoError("cannot open shard: " + path.string());
    }
    std::array<char, 8> magic{};
    if (!in_.read(magic.data(), magic.size()) || magic != kShardMagic) {
        throw DataError(path.string() + ": not a ptkit shard (bad magic)");
    }
    if (!get_le(in_, header_.version) || !get_le(in_, header_.int_width) || !get_le(in_, header_.stage_max_len) ||
        !get_le(in_, header_.pad_id) || !get_le(in_, header_.batch_count) || !get_le(in_, header_.row_count)) {
        throw DataError(path.string() + ": truncated shard header");
    }
    if (header_.version != kShardVersion) {
        throw DataError(path.string() + ": unsupported shard version " + std::to_string(header_.version));
    }
    if (header_.int_width != kShardIntWidth) {
        throw DataError(path.string() + ": unsupported integer width " + std::to_string(header_.int_width));
    }
}

std::optional<PackedBatch> ShardReader::next() {
    if (batches_read_ >= header_.batch_count) {
        return std::nullopt;
    }
    std::uint32_t width = 0;
    std::uint32_t rows = 0;
    if (!get_le(in_, width) || !get_le(in_, rows)) {
        throw DataError(path_.string() + ": truncated batch header");
    }
    PackedBatch b;
    b.width = width;
    b.rows = rows;
    b.stage_max_len = header_.stage_max_len;
    const std::size_t cells = static_cast<std::size_t>(width) * rows;
    b.token_ids.resize(cells);
    for (auto& id : b.token_ids) {
        if (!get_le(in_, id)) {
            throw DataError(path_.string() + ": truncated batch payload");
        }
    }
    b.attention_mask.resize(cells);
    if (!in_.read(reinterpret_cast<char*>(b.attention_mask.data()), static_cast<std::streamsize>(cells))) {
        throw DataError(path_.string() + ": truncated batch mask");
    }
    ++batches_read_;
    return b;
}

}  // namespace ptkit::tokpack
