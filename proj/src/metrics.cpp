#include "ptkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "ptkit/error.hpp"

namespace ptkit::metrics {

double f1_from_counts(const Confusion& c) noexcept {
    const double precision = (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double recall = (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (precision + recall == 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

std::optional<double> pearson(std::span<const double> gold, std::span<const double> pred) {
    if (gold.size() != pred.size()) {
        throw std::invalid_argument("pearson: length mismatch (" + std::to_string(gold.size()) + " vs " +
                                    std::to_string(pred.size()) + ")");
    }
    if (gold.size() < 2) {
        throw std::invalid_argument("pearson: need at least 2 points");
    }
    const auto n = static_cast<double>(gold.size());
    double mean_g = 0.0;
    double mean_p = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        mean_g += gold[i];
        mean_p += pred[i];
    }
    mean_g /= n;
    mean_p /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const double dx = gold[i] - mean_g;
        const double dy = pred[i] - mean_p;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::nullopt;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::int64_t as_binary(const nlohmann::json& j) {
    if (j.is_boolean()) {
        return j.get<bool>() ? 1 : 0;
    }
    return j.get<std::int64_t>();
}

}  // namespace

Score score_task(const bench::TaskSpec& spec, std::span<const nlohmann::json> gold, std::span<const nlohmann::json> pred) {
    if (gold.size() != pred.size()) {
        throw std::invalid_argument("score: gold/pred size mismatch");
    }
    Score s{spec.metric, std::nullopt, gold.size()};
    switch (spec.label_kind) {
        case bench::LabelKind::real_valued: {
            std::vector<double> g;
            std::vector<double> p;
            for (std::size_t i = 0; i < gold.size(); ++i) {
                g.push_back(gold[i].get<double>());
                p.push_back(pred[i].get<double>());
            }
            s.value = pearson(g, p);
            break;
        }
        case bench::LabelKind::three_class: {
            std::vector<EvalPair<std::string>> pairs;
            for (std::size_t i = 0; i < gold.size(); ++i) {
                pairs.push_back({gold[i].get<std::string>(), pred[i].get<std::string>()});
            }
            const std::vector<std::string> classes(bench::kCbLabels.begin(), bench::kCbLabels.end());
            s.value = spec.metric == bench::Metric::f1 ? macro_f1<std::string>(pairs, classes) : accuracy<std::string>(pairs);
            break;
        }
        case bench::LabelKind::binary:
        case bench::LabelKind::choice_of_two: {
            std::vector<EvalPair<std::int64_t>> pairs;
            for (std::size_t i = 0; i < gold.size(); ++i) {
                pairs.push_back({as_binary(gold[i]), as_binary(pred[i])});
            }
            s.value = spec.metric == bench::Metric::f1 ? binary_f1<std::int64_t>(pairs, spec.positive_label)
                                                       : accuracy<std::int64_t>(pairs);
            break;
        }
    }
    return s;
}

Score score_files(const bench::TaskSpec& spec, const std::filesystem::path& gold_path, const std::filesystem::path& pred_path) {
    bench::ValidationReport gold_report;
    const auto gold = bench::read_task_file(gold_path, spec, &gold_report);
    if (!gold_report.violations.empty()) {
        throw DataError(gold_path.string() + ": " + std::to_string(gold_report.violations.size()) +
                        " schema violation(s) in gold file");
    }

    std::ifstream in(pred_path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open predictions: " + pred_path.string());
    }
    std::map<std::string, nlohmann::json> predictions;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("example_id") || !j.contains("label")) {
            throw DataError(pred_path.string() + ":" + std::to_string(line_no) + ": expected {\"example_id\", \"label\"}");
        }
        const auto& id = j["example_id"];
        const std::string key = id.is_string() ? id.get<std::string>() : id.dump();
        if (auto why = bench::check_label(j["label"], spec); !why.empty()) {
            throw DataError(pred_path.string() + ":" + std::to_string(line_no) + ": " + why);
        }
        predictions[key] = j["label"];
    }

    std::vector<nlohmann::json> g;
    std::vector<nlohmann::json> p;
    std::size_t missing = 0;
    for (const auto& ex : gold) {
        const auto it = predictions.find(ex.example_id);
        if (it == predictions.end()) {
            ++missing;
            continue;
        }
        g.push_back(ex.label);
        p.push_back(it->second);
    }
    if (missing > 0) {
        throw DataError(std::to_string(missing) + " gold example(s) have no prediction");
    }
    if (g.empty()) {
        throw DataError("no examples to score");
    }
    return score_task(spec, g, p);
}

std::string format_score(const Score& s) {
    std::string out(bench::to_string(s.metric));
    if (!s.value) {
        return out + " undefined";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, " %.4f", *s.value);
    return out + buf;
}

}  // namespace ptkit::metrics
