#include "ptkit/stats.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "ptkit/unicode.hpp"

namespace ptkit::stats {

void StatsAccumulator::add(std::string_view text) noexcept {
    ++stats_.examples;
    stats_.words += unicode::count_words(text);
}

void StatsAccumulator::add(std::span<const corpus::CorpusRecord> records) {
    stats_ += count_stats(records, {});
}

CorpusStats count_stats_serial(std::span<const corpus::CorpusRecord> records, std::string name) {
    CorpusStats s;
    s.dataset_name = std::move(name);
    for (const auto& rec : records) {
        ++s.examples;
        s.words += unicode::count_words(rec.text);
    }
    return s;
}

CorpusStats count_stats(std::span<const corpus::CorpusRecord> records, std::string name) {
    std::uint64_t words = 0;
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for reduction(+ : words) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        words += unicode::count_words(records[static_cast<std::size_t>(i)].text);
    }
    CorpusStats s;
    s.dataset_name = std::move(name);
    s.examples = records.size();
    s.words = words;
    return s;
}

std::string format_scaled(std::uint64_t count, std::uint64_t divisor) {
    // tenths = round_half_up(count * 10 / divisor); split the multiply to avoid overflow.
    const std::uint64_t whole = count / divisor;
    const std::uint64_t rem = count % divisor;
    const std::uint64_t tenths_num = rem * 10;  // rem < divisor <= 1e9, no overflow
    std::uint64_t tenths = tenths_num / divisor;
    const std::uint64_t tenths_rem = tenths_num % divisor;
    std::uint64_t units = whole;
    if (tenths_rem * 2 >= divisor) {
        ++tenths;
    }
    if (tenths == 10) {
        ++units;
        tenths = 0;
    }
    return std::to_string(units) + "." + std::to_string(tenths);
}

std::string render_report(std::span<const CorpusStats> rows, Scale scale) {
    const bool scaled = scale == Scale::millions_billions;
    const std::string h_name = "dataset";
    const std::string h_ex = scaled ? "exs (M)" : "examples";
    const std::string h_words = scaled ? "words (B)" : "words";

    std::vector<std::array<std::string, 3>> cells;
    cells.reserve(rows.size());
    for (const auto& r : rows) {
        if (scaled) {
            cells.push_back({r.dataset_name, format_scaled(r.examples, 1'000'000), format_scaled(r.words, 1'000'000'000)});
        } else {
            cells.push_back({r.dataset_name, std::to_string(r.examples), std::to_string(r.words)});
        }
    }

    std::size_t w0 = h_name.size();
    std::size_t w1 = h_ex.size();
    std::size_t w2 = h_words.size();
    for (const auto& c : cells) {
        w0 = std::max(w0, c[0].size());
        w1 = std::max(w1, c[1].size());
        w2 = std::max(w2, c[2].size());
    }

    std::ostringstream out;
    auto row = [&](const std::string& a, const std::string& b, const std::string& c) {
        out << a << std::string(w0 - a.size(), ' ') << "  " << std::string(w1 - b.size(), ' ') << b << "  "
            << std::string(w2 - c.size(), ' ') << c << '\n';
    };
    row(h_name, h_ex, h_words);
    out << std::string(w0 + w1 + w2 + 4, '-') << '\n';
    for (const auto& c : cells) {
        row(c[0], c[1], c[2]);
    }
    return out.str();
}

std::string render_tsv(std::span<const CorpusStats> rows) {
    std::ostringstream out;
    out << "dataset\texamples\twords\n";
    for (const auto& r : rows) {
        out << r.dataset_name << '\t' << r.examples << '\t' << r.words << '\n';
    }
    return out.str();
}

}  // namespace ptkit::stats
