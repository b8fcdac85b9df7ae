#include <cstdio>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ptkit/curation.hpp"
#include "ptkit/stats.hpp"

using namespace ptkit;
using namespace ptkit::stats;
using corpus::CorpusRecord;
using corpus::Source;

namespace {

std::vector<CorpusRecord> records_of(std::initializer_list<const char*> texts) {
    std::vector<CorpusRecord> out;
    for (const char* t : texts) out.push_back(CorpusRecord{"i" + std::to_string(out.size()), t, std::nullopt, Source::Other});
    return out;
}

// Half-up to one decimal by decimal string arithmetic on count * 10 / divisor.
std::string oracle_scaled(std::uint64_t count, std::uint64_t divisor) {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(count) * 20 / divisor;  // in twentieths
    const auto tenths = static_cast<std::uint64_t>((scaled + 1) / 2);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

}  // namespace

TEST_CASE("count examples") {
    const auto s = count_stats(records_of({"ola mundo", "bom dia a todos"}), "x");
    CHECK(s.examples == 2);
    CHECK(s.words == 6);
    CHECK(s.dataset_name == "x");
    const auto e = count_stats(std::vector<CorpusRecord>{}, "empty");
    CHECK(e.examples == 0);
    CHECK(e.words == 0);
    // Non-ASCII whitespace separates words too.
    CHECK(count_stats(records_of({"a\xC2\xA0" "b\xE3\x80\x80" "c\td\n"}), "u").words == 4);
    CHECK(count_stats(records_of({"", "   "}), "blank").words == 0);
}

TEST_CASE("word counts match the oracle and the curation measure") {
    std::mt19937_64 rng(7);
    std::vector<CorpusRecord> recs;
    std::uint64_t want = 0;
    curation::FilterConfig cfg;
    for (int i = 0; i < 10000; ++i) {
        const auto t = oracle::random_glyph_text(rng, rng() % 60, 0.3, 0.1);
        want += oracle::brute_words(t).size();
        recs.push_back(CorpusRecord{"r", t.utf8(), std::nullopt, Source::Other});
        if (i % 50 == 0) {
            CHECK(count_stats(std::span(&recs.back(), 1), "one").words ==
                  curation::measure(recs.back().text, cfg).word_count);
        }
    }
    const auto s = count_stats(recs, "gen");
    CHECK(s.examples == 10000);
    CHECK(s.words == want);
    CHECK(count_stats_serial(recs, "gen") == s);

    StatsAccumulator acc("gen");
    for (std::size_t i = 0; i < recs.size(); i += 333) {
        acc.add(std::span(recs).subspan(i, std::min<std::size_t>(333, recs.size() - i)));
    }
    CHECK(acc.result() == s);
}

TEST_CASE("additivity over concatenation") {
    std::mt19937_64 rng(8);
    for (int round = 0; round < 50; ++round) {
        std::vector<CorpusRecord> a, b;
        for (int i = 0, n = static_cast<int>(rng() % 40); i < n; ++i) {
            a.push_back(CorpusRecord{"a", oracle::random_glyph_text(rng, rng() % 30).utf8(), std::nullopt, Source::Other});
        }
        for (int i = 0, n = static_cast<int>(rng() % 40); i < n; ++i) {
            b.push_back(CorpusRecord{"b", oracle::random_glyph_text(rng, rng() % 30).utf8(), std::nullopt, Source::Other});
        }
        auto ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        auto sum = count_stats(a, "s");
        sum += count_stats(b, "t");
        CHECK(count_stats(ab, "s") == sum);
    }
}

TEST_CASE("scaled formatting examples") {
    CHECK(format_scaled(4100000, 1000000) == "4.1");
    CHECK(format_scaled(2728000000, 1000000000) == "2.7");
    CHECK(format_scaled(16100000, 1000000) == "16.1");
    CHECK(format_scaled(4300000000, 1000000000) == "4.3");
    CHECK(format_scaled(0, 1000000) == "0.0");
    CHECK(format_scaled(50000, 1000000) == "0.1");   // exactly half rounds up
    CHECK(format_scaled(49999, 1000000) == "0.0");
    CHECK(format_scaled(9950000, 1000000) == "10.0");
}

TEST_CASE("scaled formatting matches the oracle") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100000; ++i) {
        const std::uint64_t divisor = i % 2 ? 1000000 : 1000000000;
        std::uint64_t count = rng() % (i % 3 == 0 ? 100000000000ULL : 50000000ULL);
        if (i % 7 == 0) count = (count / (divisor / 20)) * (divisor / 20);  // land on half boundaries
        CHECK(format_scaled(count, divisor) == oracle_scaled(count, divisor));
    }
}

TEST_CASE("report rendering") {
    const std::vector<CorpusStats> rows{{"Albertina 100M PT BR", 4100000, 2728000000}, {"empty", 0, 0},
                                        {"Albertina 1.5B PT PT", 16100000, 4300000000}};
    const auto table = render_report(rows, Scale::millions_billions);
    CHECK(table.find("4.1") != std::string::npos);
    CHECK(table.find("2.7") != std::string::npos);
    CHECK(table.find("16.1") != std::string::npos);
    CHECK(table.find("4.3") != std::string::npos);
    // Rows keep input order.
    const auto p1 = table.find("100M");
    const auto p2 = table.find("empty");
    const auto p3 = table.find("1.5B");
    CHECK(p1 < p2);
    CHECK(p2 < p3);
    // Aligned: every line has the same width.
    std::size_t width = std::string::npos;
    std::size_t start = 0;
    while (start < table.size()) {
        const auto end = table.find('\n', start);
        if (width == std::string::npos) width = end - start;
        CHECK(end - start == width);
        start = end + 1;
    }

    const auto unit = render_report(rows, Scale::unit);
    CHECK(unit.find("2728000000") != std::string::npos);
    CHECK(unit.find("4100000") != std::string::npos);

    CHECK(render_tsv(rows) ==
          "dataset\texamples\twords\n"
          "Albertina 100M PT BR\t4100000\t2728000000\n"
          "empty\t0\t0\n"
          "Albertina 1.5B PT PT\t16100000\t4300000000\n");
}
