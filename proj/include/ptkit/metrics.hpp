#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptkit/benchprep.hpp"

namespace ptkit::metrics {

template <typename Label>
struct EvalPair {
    Label gold;
    Label pred;
};

template <typename Label>
double accuracy(std::span<const EvalPair<Label>> pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("accuracy: no pairs");
    }
    std::size_t hits = 0;
    for (const auto& p : pairs) {
        hits += (p.gold == p.pred) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
};

// Zero denominators make P or R zero; F1 is zero when P + R is zero.
double f1_from_counts(const Confusion& c) noexcept;

template <typename Label>
Confusion one_vs_rest(std::span<const EvalPair<Label>> pairs, const Label& positive) {
    Confusion c;
    for (const auto& p : pairs) {
        const bool g = p.gold == positive;
        const bool q = p.pred == positive;
        c.tp += (g && q) ? 1 : 0;
        c.fp += (!g && q) ? 1 : 0;
        c.fn += (g && !q) ? 1 : 0;
    }
    return c;
}

template <typename Label>
double binary_f1(std::span<const EvalPair<Label>> pairs, const Label& positive) {
    if (pairs.empty()) {
        throw std::invalid_argument("f1: no pairs");
    }
    return f1_from_counts(one_vs_rest(pairs, positive));
}

// Mean of per-class F1. A class absent from both gold and predictions scores 1.
template <typename Label>
double macro_f1(std::span<const EvalPair<Label>> pairs, std::span<const Label> classes) {
    if (pairs.empty()) {
        throw std::invalid_argument("f1: no pairs");
    }
    if (classes.empty()) {
        throw std::invalid_argument("macro f1: empty class set");
    }
    double sum = 0.0;
    for (const auto& cls : classes) {
        const Confusion c = one_vs_rest(pairs, cls);
        sum += (c.tp + c.fp + c.fn == 0) ? 1.0 : f1_from_counts(c);
    }
    return sum / static_cast<double>(classes.size());
}

// Sample Pearson correlation. nullopt means undefined (a zero-variance input).
// Throws std::invalid_argument on length mismatch or fewer than 2 points.
std::optional<double> pearson(std::span<const double> gold, std::span<const double> pred);

struct Score {
    bench::Metric metric;
    std::optional<double> value;  // nullopt only for an undefined Pearson
    std::size_t pairs = 0;
};

// Scores predictions for one task with the metric assigned to it: macro F1 for
// CB, binary F1 on the positive label for MRPC and MultiRC (pooled over all
// answer options), accuracy or Pearson otherwise.
Score score_task(const bench::TaskSpec& spec, std::span<const nlohmann::json> gold, std::span<const nlohmann::json> pred);

// Joins gold and prediction files on example_id. Prediction lines carry
// {"example_id", "label"}. Throws DataError on missing or invalid predictions.
Score score_files(const bench::TaskSpec& spec, const std::filesystem::path& gold, const std::filesystem::path& pred);

// "f1 0.6372" / "pearson undefined"
std::string format_score(const Score& s);

}  // namespace ptkit::metrics
