#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ptkit/benchprep.hpp"

namespace ptkit::experiments {

enum class SizeClass { m100, m335, m900, b1_5 };

std::string_view to_string(SizeClass s) noexcept;
SizeClass parse_size_class(std::string_view s);

// Fine-tuning grid. Only learning rate, dropout and bf16 vary; seeds repeat every combination.
struct HyperGrid {
    int epochs = 5;
    int batch_size = 4;
    std::vector<double> learning_rates{1e-5, 5e-5, 1e-6};
    std::string scheduler = "linear";
    double warmup_ratio = 0.1;
    double adam_epsilon = 1e-6;
    double weight_decay = 0.01;
    std::vector<double> dropouts{0.0, 0.1};
    std::vector<bool> bf16{false, true};
    std::vector<std::uint64_t> seeds{41, 42, 43};
    std::uint64_t split_seed = 1;

    std::size_t combinations() const noexcept { return learning_rates.size() * dropouts.size() * bf16.size(); }
    std::size_t runs_per_cell() const noexcept { return combinations() * seeds.size(); }

    static HyperGrid from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

struct ModelEntry {
    std::string model_id;
    bench::Variant variant = bench::Variant::PTBR;
    SizeClass size_class = SizeClass::m900;
    bool supports_multichoice = true;

    // Throws ConfigError for a 100M model claiming multiple-choice support.
    void validate() const;
};

std::vector<ModelEntry> load_models(const std::filesystem::path& path);
std::vector<bench::TaskName> load_tasks(const std::filesystem::path& path);

struct RunConfig {
    std::string model_id;
    bench::TaskName task = bench::TaskName::RTE;
    double learning_rate = 0.0;
    double dropout = 0.0;
    bool bf16 = false;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    // Fixed grid values, carried so the trainer sees the full assignment.
    int epochs = 5;
    int batch_size = 4;
    std::string scheduler = "linear";
    double warmup_ratio = 0.1;
    double adam_epsilon = 1e-6;
    double weight_decay = 0.01;
    std::string run_key;

    nlohmann::ordered_json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
};

// Shortest round-trip decimal form, used for keys and placeholders.
std::string format_number(double v);

// Canonical "field=value;..." string of every field except run_key.
std::string canonical_config(const RunConfig& c);
// First 128 bits of SHA-256 over the canonical form, hex encoded.
std::string compute_run_key(const RunConfig& c);

bool applicable(const ModelEntry& model, const bench::TaskSpec& task) noexcept;

// models x applicable tasks x lr x dropout x bf16 x seed, in that nesting order.
std::vector<RunConfig> build_matrix(std::span<const ModelEntry> models, std::span<const bench::TaskName> tasks,
                                    const HyperGrid& grid);

void write_matrix(std::span<const RunConfig> configs, const std::filesystem::path& path);
std::vector<RunConfig> read_matrix(const std::filesystem::path& path);

enum class RunStatus { done, failed };

struct RunResult {
    std::string run_key;
    double dev_score = 0.0;
    double test_score = 0.0;
    bench::Metric metric = bench::Metric::accuracy;
    RunStatus status = RunStatus::failed;
    std::string diagnostics;
};

struct StoredRun {
    RunConfig config;
    RunResult result;
};

// Append-only results log (results.jsonl) plus a claims/ directory.
// Appends are single write(2) calls on an O_APPEND descriptor followed by
// fsync, so a result is durable before anyone can observe it as done.
class ResultsStore {
public:
    // Creates the directory layout; throws IoError when it is not writable.
    explicit ResultsStore(const std::filesystem::path& dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }

    // Picks up lines appended since the last call (by this or another process).
    void refresh();

    bool is_done(const std::string& run_key) const;
    std::optional<StoredRun> latest(const std::string& run_key) const;
    // Latest state per key, in first-appearance order.
    std::vector<StoredRun> runs() const;
    std::uint64_t log_lines() const;

    void append(const RunConfig& config, const RunResult& result);

    // Atomic claim via O_CREAT|O_EXCL. Claims held by dead processes on this host are reclaimed.
    bool try_claim(const std::string& run_key);
    void release(const std::string& run_key);

    // Rewrites the log with one line per key. Not safe while other processes append.
    void compact();

    void save_matrix(std::span<const RunConfig> configs);
    std::optional<std::vector<RunConfig>> load_matrix() const;

private:
    void ingest_line(const std::string& line);
    void refresh_locked();

    std::filesystem::path dir_;
    std::filesystem::path log_path_;
    std::filesystem::path claims_dir_;
    mutable std::mutex mu_;
    std::uintmax_t offset_ = 0;
    std::uint64_t lines_ = 0;
    std::vector<std::string> order_;
    std::map<std::string, StoredRun> latest_;
};

// Placeholders available to trainer templates. The first eight are mandatory.
inline constexpr std::array<std::string_view, 8> kRequiredPlaceholders{
    "{model_id}", "{task}", "{learning_rate}", "{dropout}", "{bf16}", "{seed}", "{split_seed}", "{run_key}"};

// Throws ConfigError naming the first missing placeholder.
void check_trainer_template(std::string_view tmpl);
// Substitutes shell-quoted values for every placeholder.
std::string render_command(std::string_view tmpl, const RunConfig& c);

// Parses "dev=<float> test=<float>" from trainer output (any line).
std::optional<std::pair<double, double>> parse_trainer_output(std::string_view output);

struct ExecuteSummary {
    std::uint64_t executed = 0;      // trainer invocations in this pass
    std::uint64_t done = 0;          // newly done in this pass
    std::uint64_t failed = 0;        // failed in this pass
    std::uint64_t already_done = 0;  // skipped: done before this pass
    std::uint64_t busy = 0;          // skipped: claimed by another orchestrator
};

// Runs every config not yet done in `store`, at most `workers` at a time.
ExecuteSummary execute(std::span<const RunConfig> configs, std::string_view trainer_template, std::size_t workers,
                       ResultsStore& store);

struct Cell {
    std::optional<double> score;  // mean test score of the dev-best combination
    std::string deficit;          // why the cell is n.a.
    double learning_rate = 0.0;
    double dropout = 0.0;
    bool bf16 = false;
    double mean_dev = 0.0;
};

struct Report {
    std::vector<std::string> models;
    std::vector<bench::TaskName> tasks;
    std::map<std::pair<std::string, bench::TaskName>, Cell> cells;

    const Cell* cell(const std::string& model, bench::TaskName task) const;
    std::string render_table() const;
    std::string render_tsv() const;
};

// Best-on-dev selection per (model, task): average dev over seeds per combination,
// pick the highest mean (ties: lower learning rate, lower dropout, bf16 off),
// report that combination's mean test score. Cells with any planned run not
// done render as n.a. with a deficit.
Report aggregate(std::span<const StoredRun> runs, std::span<const RunConfig> planned);

}  // namespace ptkit::experiments
