#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ptkit/curation.hpp"
#include "ptkit/experiments.hpp"
#include "ptkit/tokpack.hpp"
#include "ptkit/variant_split.hpp"

namespace ptkit {

inline constexpr const char* kDefaultSchedule = "128:250000,256:80000,512:60000";

// Shared configuration for every subcommand. JSON with // and /* */ comments
// allowed; unknown keys and missing referenced files are ConfigErrors.
struct PipelineConfig {
    std::filesystem::path file;  // empty when built from defaults

    // global
    std::string log_level = "info";
    std::size_t workers = 0;  // 0: hardware concurrency

    // variant_split
    variant::RoutingPolicy routing;

    // curation
    curation::CurationPolicy curation;
    std::optional<std::filesystem::path> blocklist_path;

    // tokpack
    std::optional<std::filesystem::path> vocab;
    tokpack::TruncationSchedule schedule = tokpack::TruncationSchedule::parse(kDefaultSchedule);
    std::uint64_t global_batch = 3072;
    std::uint64_t devices = 16;
    std::size_t chunk_records = 8192;

    // benchprep
    std::uint64_t split_seed = 1;
    std::size_t translate_batch_size = 32;
    int translate_max_attempts = 5;
    std::optional<std::filesystem::path> translation_cache;

    // experiments
    experiments::HyperGrid grid;
    std::optional<std::filesystem::path> models;
    std::optional<std::filesystem::path> tasks;
    std::optional<std::string> trainer;

    static PipelineConfig defaults();
    static PipelineConfig load(const std::filesystem::path& path);
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

    // Effective worker count: `requested` (0 = unset) capped by the global count.
    std::size_t cap_workers(std::size_t requested) const noexcept;
};

}  // namespace ptkit
