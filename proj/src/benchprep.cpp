#include "ptkit/benchprep.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ptkit/error.hpp"
#include "ptkit/unicode.hpp"

namespace ptkit::bench {

namespace {

const std::vector<TaskSpec>& registry() {
    static const std::vector<TaskSpec> specs = [] {
        const std::set<Variant> both{Variant::PTPT, Variant::PTBR};
        const std::set<Variant> br_only{Variant::PTBR};
        const std::vector<std::string> pair{"sentence1", "sentence2"};
        const std::vector<std::string> prem_hyp{"premise", "hypothesis"};
        std::vector<TaskSpec> v;
        v.push_back({TaskName::ASSIN2_RTE, Suite::ASSIN2, prem_hyp, {}, LabelKind::binary, Metric::accuracy, br_only});
        v.push_back({TaskName::ASSIN2_STS, Suite::ASSIN2, prem_hyp, {}, LabelKind::real_valued, Metric::pearson, br_only});
        v.push_back({TaskName::RTE, Suite::GLUE, pair, {}, LabelKind::binary, Metric::accuracy, both});
        v.push_back({TaskName::WNLI, Suite::GLUE, pair, {}, LabelKind::binary, Metric::accuracy, both});
        v.push_back({TaskName::MRPC, Suite::GLUE, pair, {}, LabelKind::binary, Metric::f1, both});
        v.push_back({TaskName::STSB, Suite::GLUE, pair, {}, LabelKind::real_valued, Metric::pearson, both});
        v.push_back({TaskName::COPA, Suite::SuperGLUE, {"premise", "choice1", "choice2"}, {"question"},
                     LabelKind::choice_of_two, Metric::accuracy, both});
        v.push_back({TaskName::CB, Suite::SuperGLUE, prem_hyp, {}, LabelKind::three_class, Metric::f1, both});
        v.push_back({TaskName::MULTIRC, Suite::SuperGLUE, {"paragraph", "question", "answer"}, {}, LabelKind::binary,
                     Metric::f1, both});
        v.push_back({TaskName::BOOLQ, Suite::SuperGLUE, {"question", "passage"}, {}, LabelKind::binary, Metric::accuracy, both});
        return v;
    }();
    return specs;
}

std::string normalize_name(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    // Rejection sampling keeps the draw unbiased and implementation-independent.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

std::set<std::string> allowed_keys(const TaskSpec& spec) {
    std::set<std::string> keys{"example_id", "label"};
    keys.insert(spec.text_fields.begin(), spec.text_fields.end());
    keys.insert(spec.meta_fields.begin(), spec.meta_fields.end());
    return keys;
}

}  // namespace

std::string_view to_string(TaskName t) noexcept {
    static constexpr std::array<std::string_view, 10> kNames{"ASSIN2_RTE", "ASSIN2_STS", "RTE",     "WNLI", "MRPC",
                                                             "STSB",       "COPA",       "CB",      "MULTIRC", "BOOLQ"};
    return kNames[static_cast<std::size_t>(t)];
}

std::string_view to_string(Suite s) noexcept {
    switch (s) {
        case Suite::ASSIN2:
            return "ASSIN2";
        case Suite::GLUE:
            return "GLUE";
        case Suite::SuperGLUE:
            return "SuperGLUE";
    }
    return "";
}

std::string_view to_string(LabelKind k) noexcept {
    switch (k) {
        case LabelKind::binary:
            return "binary";
        case LabelKind::three_class:
            return "three_class";
        case LabelKind::real_valued:
            return "real_valued";
        case LabelKind::choice_of_two:
            return "choice_of_two";
    }
    return "";
}

std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::accuracy:
            return "accuracy";
        case Metric::f1:
            return "f1";
        case Metric::pearson:
            return "pearson";
    }
    return "";
}

std::string_view to_string(Variant v) noexcept {
    return v == Variant::PTPT ? "PTPT" : "PTBR";
}

std::optional<TaskName> try_parse_task(std::string_view name) noexcept {
    const std::string key = normalize_name(name);
    for (const auto& spec : registry()) {
        if (normalize_name(to_string(spec.name)) == key) {
            return spec.name;
        }
    }
    return std::nullopt;
}

TaskName parse_task(std::string_view name) {
    if (auto t = try_parse_task(name)) {
        return *t;
    }
    throw ConfigError("unknown task '" + std::string(name) + "'");
}

Variant parse_variant(std::string_view name) {
    const std::string key = normalize_name(name);
    if (key == "PTPT") {
        return Variant::PTPT;
    }
    if (key == "PTBR") {
        return Variant::PTBR;
    }
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected ptpt or ptbr)");
}

const TaskSpec& task_spec(TaskName name) {
    return registry()[static_cast<std::size_t>(name)];
}

std::span<const TaskSpec> all_tasks() {
    return registry();
}

std::string check_label(const nlohmann::json& label, const TaskSpec& spec) {
    switch (spec.label_kind) {
        case LabelKind::binary:
        case LabelKind::choice_of_two:
            if (label.is_boolean() && spec.label_kind == LabelKind::binary) {
                return {};
            }
            if (label.is_number_integer() && (label.get<std::int64_t>() == 0 || label.get<std::int64_t>() == 1)) {
                return {};
            }
            return "label must be 0 or 1";
        case LabelKind::three_class:
            if (label.is_string() &&
                std::find(kCbLabels.begin(), kCbLabels.end(), label.get_ref<const std::string&>()) != kCbLabels.end()) {
                return {};
            }
            return "label must be one of entailment, contradiction, neutral";
        case LabelKind::real_valued:
            if (label.is_number()) {
                const double v = label.get<double>();
                if (v >= 0.0 && v <= 5.0) {
                    return {};
                }
            }
            return "label must be a number in [0, 5]";
    }
    return "unknown label kind";
}

std::optional<TaskExample> parse_task_example(std::string_view line, const TaskSpec& spec, std::uint64_t line_no,
                                              std::vector<Violation>& violations) {
    const std::size_t before = violations.size();
    const auto doc = nlohmann::json::parse(unicode::sanitize_utf8(line), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        violations.push_back({line_no, "", "", "not a JSON object"});
        return std::nullopt;
    }

    TaskExample ex;
    if (const auto it = doc.find("example_id"); it != doc.end() && it->is_string() && !it->get_ref<const std::string&>().empty()) {
        ex.example_id = it->get<std::string>();
    } else if (it != doc.end() && it->is_number_integer()) {
        ex.example_id = it->dump();
    } else {
        violations.push_back({line_no, "", "example_id", "missing or empty example_id"});
    }

    auto require_string = [&](const std::string& field) {
        const auto it = doc.find(field);
        if (it == doc.end()) {
            violations.push_back({line_no, ex.example_id, field, "missing field"});
        } else if (!it->is_string()) {
            violations.push_back({line_no, ex.example_id, field, "field must be a string"});
        } else {
            ex.fields[field] = it->get<std::string>();
        }
    };
    for (const auto& f : spec.text_fields) {
        require_string(f);
    }
    for (const auto& f : spec.meta_fields) {
        require_string(f);
    }

    if (const auto it = doc.find("label"); it == doc.end()) {
        violations.push_back({line_no, ex.example_id, "label", "missing label"});
    } else if (auto why = check_label(*it, spec); !why.empty()) {
        violations.push_back({line_no, ex.example_id, "label", why + ", got " + it->dump()});
    } else {
        ex.label = *it;
    }

    const auto keys = allowed_keys(spec);
    for (const auto& [key, value] : doc.items()) {
        if (!keys.contains(key)) {
            violations.push_back({line_no, ex.example_id, key, "unexpected field"});
        }
    }

    if (violations.size() != before) {
        return std::nullopt;
    }
    return ex;
}

nlohmann::ordered_json task_example_to_json(const TaskExample& ex, const TaskSpec& spec) {
    nlohmann::ordered_json j;
    j["example_id"] = ex.example_id;
    for (const auto& f : spec.text_fields) {
        if (const auto it = ex.fields.find(f); it != ex.fields.end()) {
            j[f] = it->second;
        }
    }
    for (const auto& f : spec.meta_fields) {
        if (const auto it = ex.fields.find(f); it != ex.fields.end()) {
            j[f] = it->second;
        }
    }
    j["label"] = ex.label;
    return j;
}

namespace {

template <typename OnExample>
ValidationReport scan_task_file(const std::filesystem::path& path, const TaskSpec& spec, OnExample&& on_example) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open task file: " + path.string());
    }
    ValidationReport report;
    std::set<std::string> seen_ids;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        auto ex = parse_task_example(line, spec, line_no, report.violations);
        if (!ex) {
            continue;
        }
        if (!seen_ids.insert(ex->example_id).second) {
            report.violations.push_back({line_no, ex->example_id, "example_id", "duplicate example_id"});
            continue;
        }
        ++report.valid;
        on_example(std::move(*ex));
    }
    return report;
}

}  // namespace

ValidationReport validate_task_file(const std::filesystem::path& path, const TaskSpec& spec) {
    return scan_task_file(path, spec, [](TaskExample&&) {});
}

std::vector<TaskExample> read_task_file(const std::filesystem::path& path, const TaskSpec& spec, ValidationReport* report) {
    std::vector<TaskExample> out;
    auto r = scan_task_file(path, spec, [&](TaskExample&& ex) { out.push_back(std::move(ex)); });
    if (report) {
        *report = std::move(r);
    }
    return out;
}

void write_task_file(std::span<const TaskExample> examples, const TaskSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write task file: " + path.string());
    }
    for (const auto& ex : examples) {
        out << task_example_to_json(ex, spec).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::size_t train_size(std::size_t n) {
    std::size_t train = (9 * n + 5) / 10;
    if (train >= n && n > 0) {
        train = n - 1;
    }
    return train;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

SplitResult split_90_10(std::span<const TaskExample> examples, std::uint64_t seed) {
    if (examples.size() < 2) {
        throw std::invalid_argument("split_90_10 needs at least 2 examples, got " + std::to_string(examples.size()));
    }
    const auto perm = seeded_permutation(examples.size(), seed);
    const std::size_t n_train = train_size(examples.size());
    SplitResult out;
    out.seed = seed;
    out.train.reserve(n_train);
    out.dev.reserve(examples.size() - n_train);
    for (std::size_t k = 0; k < perm.size(); ++k) {
        (k < n_train ? out.train : out.dev).push_back(examples[perm[k]]);
    }
    return out;
}

}  // namespace ptkit::bench
