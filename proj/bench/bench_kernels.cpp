// Serial reference vs OpenMP kernel, same inputs. Run with
//   build/bench/bench_kernels --benchmark_filter=curate
// and compare the _serial / _parallel pairs.

#include <benchmark/benchmark.h>

#include <random>
#include <string_view>
#include <vector>

#include "corpus_generator.hpp"
#include "ptkit/corpus_io.hpp"
#include "ptkit/curation.hpp"
#include "ptkit/stats.hpp"
#include "ptkit/tokpack.hpp"
#include "ptkit/variant_split.hpp"

using namespace ptkit;

namespace {

struct Fixture {
    std::vector<corpus::CorpusRecord> records;
    tokpack::Vocabulary vocab;
    std::vector<std::string_view> texts;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture f;
        const auto c = testing::generate_corpus(99, 40000);
        std::istringstream in(c.raw);
        std::string line;
        std::uint64_t n = 0;
        while (std::getline(in, line)) {
            if (auto r = corpus::parse_record_line(line, ++n)) f.records.push_back(std::move(*r));
        }
        std::vector<std::string> pieces = c.words;
        pieces.insert(pieces.end(), c.stopwords.begin(), c.stopwords.end());
        // A few short pieces so unknown-looking words still split.
        for (const char* p : {"a", "e", "o", "##a", "##e", "##o", "##s"}) {
            if (std::find(pieces.begin(), pieces.end(), p) == pieces.end()) pieces.push_back(p);
        }
        f.vocab = tokpack::Vocabulary::from_pieces(pieces);
        for (const auto& r : f.records) f.texts.push_back(r.text);
        return f;
    }();
    return f;
}

void route_serial(benchmark::State& state) {
    const auto& f = fixture();
    const variant::RoutingPolicy policy;
    for (auto _ : state) benchmark::DoNotOptimize(variant::route_batch_serial(f.records, policy));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.records.size()));
}

void route_parallel(benchmark::State& state) {
    const auto& f = fixture();
    const variant::RoutingPolicy policy;
    for (auto _ : state) benchmark::DoNotOptimize(variant::route_batch(f.records, policy));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.records.size()));
}

curation::CurationPolicy bench_policy() {
    curation::CurationPolicy p;
    p.blocklist = curation::Blocklist::from_json(nlohmann::json{{"suffix_domains", {"bloqueado.pt"}}});
    return p;
}

void curate_serial(benchmark::State& state) {
    const auto& f = fixture();
    const auto policy = bench_policy();
    for (auto _ : state) benchmark::DoNotOptimize(curation::curate_batch_serial(f.records, policy));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.records.size()));
}

void curate_parallel(benchmark::State& state) {
    const auto& f = fixture();
    const auto policy = bench_policy();
    for (auto _ : state) benchmark::DoNotOptimize(curation::curate_batch(f.records, policy));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.records.size()));
}

void stats_serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(stats::count_stats_serial(f.records, "bench"));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.records.size()));
}

void stats_parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(stats::count_stats(f.records, "bench"));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.records.size()));
}

void tokenize_serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(tokpack::tokenize_batch_serial(f.texts, f.vocab));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.texts.size()));
}

void tokenize_parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(tokpack::tokenize_batch(f.texts, f.vocab));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.texts.size()));
}

}  // namespace

BENCHMARK(route_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(route_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(curate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(curate_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(stats_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(stats_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(tokenize_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(tokenize_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
