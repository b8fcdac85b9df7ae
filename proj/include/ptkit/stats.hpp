#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptkit/corpus_io.hpp"

namespace ptkit::stats {

struct CorpusStats {
    std::string dataset_name;
    std::uint64_t examples = 0;
    std::uint64_t words = 0;

    // Field-wise sum; keeps this object's name.
    CorpusStats& operator+=(const CorpusStats& other) noexcept {
        examples += other.examples;
        words += other.words;
        return *this;
    }
    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// Incremental counter for streams that do not fit in memory.
class StatsAccumulator {
public:
    explicit StatsAccumulator(std::string name) { stats_.dataset_name = std::move(name); }
    void add(std::string_view text) noexcept;
    void add(std::span<const corpus::CorpusRecord> records);
    const CorpusStats& result() const noexcept { return stats_; }

private:
    CorpusStats stats_;
};

CorpusStats count_stats_serial(std::span<const corpus::CorpusRecord> records, std::string name);
// OpenMP map-reduce over records; identical result to the serial version.
CorpusStats count_stats(std::span<const corpus::CorpusRecord> records, std::string name);

enum class Scale { unit, millions_billions };

// Half-up rounding of count / divisor to one decimal place, computed in integers.
std::string format_scaled(std::uint64_t count, std::uint64_t divisor);

std::string render_report(std::span<const CorpusStats> rows, Scale scale);
// Tab-separated: header line then one row per dataset, raw counts.
std::string render_tsv(std::span<const CorpusStats> rows);

}  // namespace ptkit::stats
