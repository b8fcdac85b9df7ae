#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ptkit/tokpack.hpp"

namespace ptkit::tokpack {

struct PackOptions {
    TruncationSchedule schedule;
    std::uint64_t global_batch = 3072;
    std::uint64_t devices = 16;
    std::size_t chunk_records = 8192;
    // Input lines are {"token_ids": [...]} produced by an external tokenizer.
    bool pretokenized = false;
};

struct StageSummary {
    Stage stage;
    std::filesystem::path shard;
    std::uint64_t batches = 0;
    std::uint64_t rows = 0;
    std::uint64_t real_tokens = 0;  // sum of attention-mask entries
    std::uint64_t padded_cells = 0;
    std::uint64_t truncated_rows = 0;
};

struct PackSummary {
    std::uint64_t per_device = 0;
    std::uint64_t records = 0;
    std::uint64_t malformed = 0;
    std::vector<StageSummary> stages;

    nlohmann::ordered_json to_json(const PackOptions& options) const;
};

// Streams `input` once, tokenizing chunks in parallel, and writes one shard per
// schedule stage plus manifest.json into `out_dir`.
PackSummary pack_corpus(const std::filesystem::path& input, const Vocabulary& vocab, const PackOptions& options,
                        const std::filesystem::path& out_dir);

std::string shard_file_name(std::size_t stage_index, std::uint32_t max_len);

}  // namespace ptkit::tokpack
