#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ptkit::bench {

enum class TaskName { ASSIN2_RTE, ASSIN2_STS, RTE, WNLI, MRPC, STSB, COPA, CB, MULTIRC, BOOLQ };
enum class Suite { ASSIN2, GLUE, SuperGLUE };
enum class LabelKind { binary, three_class, real_valued, choice_of_two };
enum class Metric { accuracy, f1, pearson };
enum class Variant { PTPT, PTBR };

std::string_view to_string(TaskName t) noexcept;
std::string_view to_string(Suite s) noexcept;
std::string_view to_string(LabelKind k) noexcept;
std::string_view to_string(Metric m) noexcept;
std::string_view to_string(Variant v) noexcept;

// Accepts canonical names and common spellings ("STS-B", "ASSIN2-RTE", "multirc"). Throws ConfigError.
TaskName parse_task(std::string_view name);
std::optional<TaskName> try_parse_task(std::string_view name) noexcept;
// "ptpt" / "PTBR" / "pt-pt" ...; throws ConfigError.
Variant parse_variant(std::string_view name);

inline constexpr std::array<std::string_view, 3> kCbLabels{"entailment", "contradiction", "neutral"};

struct TaskSpec {
    TaskName name;
    Suite suite;
    std::vector<std::string> text_fields;  // translated
    std::vector<std::string> meta_fields;  // carried verbatim (COPA's cause/effect marker)
    LabelKind label_kind;
    Metric metric;
    std::set<Variant> variants;
    // Positive class for binary F1 (MRPC, MultiRC).
    int positive_label = 1;
};

const TaskSpec& task_spec(TaskName name);
std::span<const TaskSpec> all_tasks();

struct TaskExample {
    std::string example_id;
    std::map<std::string, std::string> fields;
    nlohmann::json label;

    friend bool operator==(const TaskExample&, const TaskExample&) = default;
};

// Empty string when the label is inside the task's label domain, else a reason.
std::string check_label(const nlohmann::json& label, const TaskSpec& spec);

struct Violation {
    std::uint64_t line = 0;
    std::string example_id;
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::uint64_t valid = 0;
    std::vector<Violation> violations;
};

// Parses one task-file line. On schema problems returns nullopt and appends violations.
std::optional<TaskExample> parse_task_example(std::string_view line, const TaskSpec& spec, std::uint64_t line_no,
                                              std::vector<Violation>& violations);

nlohmann::ordered_json task_example_to_json(const TaskExample& ex, const TaskSpec& spec);

// Checks every line against the schema; never mutates the file. Throws IoError if unreadable.
ValidationReport validate_task_file(const std::filesystem::path& path, const TaskSpec& spec);

// Reads well-formed examples; malformed lines are reported through `report` when given.
std::vector<TaskExample> read_task_file(const std::filesystem::path& path, const TaskSpec& spec,
                                        ValidationReport* report = nullptr);
void write_task_file(std::span<const TaskExample> examples, const TaskSpec& spec, const std::filesystem::path& path);

// round_half_up(0.9 n), reduced so that dev keeps at least one example.
std::size_t train_size(std::size_t n);

// Seeded Fisher-Yates permutation of 0..n-1 driven by mt19937_64; identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct SplitResult {
    std::vector<TaskExample> train;
    std::vector<TaskExample> dev;
    std::uint64_t seed = 0;
};

// Throws std::invalid_argument when fewer than 2 examples.
SplitResult split_90_10(std::span<const TaskExample> examples, std::uint64_t seed);

}  // namespace ptkit::bench
