#include "ptkit/experiments.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "ptkit/error.hpp"
#include "ptkit/hash.hpp"

namespace ptkit::experiments {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(SizeClass s) noexcept {
    switch (s) {
        case SizeClass::m100: return "m100";
        case SizeClass::m335: return "m335";
        case SizeClass::m900: return "m900";
        case SizeClass::b1_5: return "b1_5";
    }
    return "?";
}

SizeClass parse_size_class(std::string_view s) {
    for (auto c : {SizeClass::m100, SizeClass::m335, SizeClass::m900, SizeClass::b1_5}) {
        if (s == to_string(c)) {
            return c;
        }
    }
    throw ConfigError("unknown size class: " + std::string(s) + " (expected m100, m335, m900 or b1_5)");
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError(std::string(where) + ": unknown key \"" + it.key() + "\"");
        }
    }
}

template <typename T>
std::vector<T> nonempty_list(const json& j, std::string_view key) {
    auto v = j.get<std::vector<T>>();
    if (v.empty()) {
        throw ConfigError("grid: " + std::string(key) + " must not be empty");
    }
    return v;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    auto j = json::parse(in, nullptr, false, true);
    if (j.is_discarded()) {
        throw ConfigError(path.string() + ": not valid JSON");
    }
    return j;
}

}  // namespace

HyperGrid HyperGrid::from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("grid: expected an object");
    }
    reject_unknown_keys(j,
                        {"epochs", "batch_size", "learning_rates", "scheduler", "warmup_ratio", "adam_epsilon",
                         "weight_decay", "dropouts", "bf16", "seeds", "split_seed"},
                        "grid");
    HyperGrid g;
    try {
        if (j.contains("epochs")) g.epochs = j["epochs"].get<int>();
        if (j.contains("batch_size")) g.batch_size = j["batch_size"].get<int>();
        if (j.contains("learning_rates")) g.learning_rates = nonempty_list<double>(j["learning_rates"], "learning_rates");
        if (j.contains("scheduler")) g.scheduler = j["scheduler"].get<std::string>();
        if (j.contains("warmup_ratio")) g.warmup_ratio = j["warmup_ratio"].get<double>();
        if (j.contains("adam_epsilon")) g.adam_epsilon = j["adam_epsilon"].get<double>();
        if (j.contains("weight_decay")) g.weight_decay = j["weight_decay"].get<double>();
        if (j.contains("dropouts")) g.dropouts = nonempty_list<double>(j["dropouts"], "dropouts");
        if (j.contains("bf16")) g.bf16 = nonempty_list<bool>(j["bf16"], "bf16");
        if (j.contains("seeds")) g.seeds = nonempty_list<std::uint64_t>(j["seeds"], "seeds");
        if (j.contains("split_seed")) g.split_seed = j["split_seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    if (g.epochs <= 0 || g.batch_size <= 0) {
        throw ConfigError("grid: epochs and batch_size must be positive");
    }
    return g;
}

ordered_json HyperGrid::to_json() const {
    ordered_json j;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rates"] = learning_rates;
    j["scheduler"] = scheduler;
    j["warmup_ratio"] = warmup_ratio;
    j["adam_epsilon"] = adam_epsilon;
    j["weight_decay"] = weight_decay;
    j["dropouts"] = dropouts;
    j["bf16"] = bf16;
    j["seeds"] = seeds;
    j["split_seed"] = split_seed;
    return j;
}

void ModelEntry::validate() const {
    if (model_id.empty()) {
        throw ConfigError("model entry with empty model_id");
    }
    if (size_class == SizeClass::m100 && supports_multichoice) {
        throw ConfigError("model " + model_id + ": 100M models cannot take multiple-choice tasks");
    }
}

std::vector<ModelEntry> load_models(const fs::path& path) {
    const auto j = read_json_file(path);
    const json& list = j.is_object() && j.contains("models") ? j["models"] : j;
    if (!list.is_array()) {
        throw ConfigError(path.string() + ": expected an array of models");
    }
    std::vector<ModelEntry> out;
    std::set<std::string> seen;
    for (const auto& m : list) {
        if (!m.is_object()) {
            throw ConfigError(path.string() + ": model entries must be objects");
        }
        reject_unknown_keys(m, {"model_id", "variant", "size_class", "supports_multichoice"}, path.string());
        ModelEntry e;
        try {
            e.model_id = m.at("model_id").get<std::string>();
            e.variant = bench::parse_variant(m.at("variant").get<std::string>());
            e.size_class = parse_size_class(m.at("size_class").get<std::string>());
            e.supports_multichoice = m.value("supports_multichoice", e.size_class != SizeClass::m100);
        } catch (const json::exception& ex) {
            throw ConfigError(path.string() + ": " + ex.what());
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(path.string() + ": " + ex.what());
        }
        e.validate();
        if (!seen.insert(e.model_id).second) {
            throw ConfigError(path.string() + ": duplicate model_id " + e.model_id);
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<bench::TaskName> load_tasks(const fs::path& path) {
    const auto j = read_json_file(path);
    const json& list = j.is_object() && j.contains("tasks") ? j["tasks"] : j;
    if (!list.is_array()) {
        throw ConfigError(path.string() + ": expected an array of task names");
    }
    std::vector<bench::TaskName> out;
    for (const auto& t : list) {
        if (!t.is_string()) {
            throw ConfigError(path.string() + ": task names must be strings");
        }
        const auto name = bench::try_parse_task(t.get<std::string>());
        if (!name) {
            throw ConfigError(path.string() + ": unknown task " + t.get<std::string>());
        }
        if (std::find(out.begin(), out.end(), *name) == out.end()) {
            out.push_back(*name);
        }
    }
    return out;
}

std::string format_number(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc{} ? end : buf);
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["model_id"] = model_id;
    j["task"] = bench::to_string(task);
    j["learning_rate"] = learning_rate;
    j["dropout"] = dropout;
    j["bf16"] = bf16;
    j["seed"] = seed;
    j["split_seed"] = split_seed;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["scheduler"] = scheduler;
    j["warmup_ratio"] = warmup_ratio;
    j["adam_epsilon"] = adam_epsilon;
    j["weight_decay"] = weight_decay;
    j["run_key"] = run_key;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        c.model_id = j.at("model_id").get<std::string>();
        c.task = bench::parse_task(j.at("task").get<std::string>());
        c.learning_rate = j.at("learning_rate").get<double>();
        c.dropout = j.at("dropout").get<double>();
        c.bf16 = j.at("bf16").get<bool>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.split_seed = j.at("split_seed").get<std::uint64_t>();
        c.epochs = j.value("epochs", c.epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.scheduler = j.value("scheduler", c.scheduler);
        c.warmup_ratio = j.value("warmup_ratio", c.warmup_ratio);
        c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
    } catch (const json::exception& e) {
        throw DataError(std::string("run config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("run config: ") + e.what());
    }
    const auto key = compute_run_key(c);
    if (j.contains("run_key") && j["run_key"] != key) {
        throw DataError("run config for " + c.model_id + "/" + std::string(bench::to_string(c.task)) +
                        ": run_key does not match its fields");
    }
    c.run_key = key;
    return c;
}

std::string canonical_config(const RunConfig& c) {
    // Length-prefix the one free-form string so no two configs share a canonical form.
    std::string s = "model_id=" + std::to_string(c.model_id.size()) + ":" + c.model_id;
    s += ";task=" + std::string(bench::to_string(c.task));
    s += ";learning_rate=" + format_number(c.learning_rate);
    s += ";dropout=" + format_number(c.dropout);
    s += ";bf16=" + std::string(c.bf16 ? "1" : "0");
    s += ";seed=" + std::to_string(c.seed);
    s += ";split_seed=" + std::to_string(c.split_seed);
    s += ";epochs=" + std::to_string(c.epochs);
    s += ";batch_size=" + std::to_string(c.batch_size);
    s += ";scheduler=" + std::to_string(c.scheduler.size()) + ":" + c.scheduler;
    s += ";warmup_ratio=" + format_number(c.warmup_ratio);
    s += ";adam_epsilon=" + format_number(c.adam_epsilon);
    s += ";weight_decay=" + format_number(c.weight_decay);
    return s;
}

std::string compute_run_key(const RunConfig& c) { return sha256_hex(canonical_config(c), 16); }

bool applicable(const ModelEntry& model, const bench::TaskSpec& task) noexcept {
    if (std::find(task.variants.begin(), task.variants.end(), model.variant) == task.variants.end()) {
        return false;
    }
    return !(task.name == bench::TaskName::COPA && !model.supports_multichoice);
}

std::vector<RunConfig> build_matrix(std::span<const ModelEntry> models, std::span<const bench::TaskName> tasks,
                                    const HyperGrid& grid) {
    std::vector<RunConfig> out;
    for (const auto& model : models) {
        model.validate();
        for (const auto task : tasks) {
            if (!applicable(model, bench::task_spec(task))) {
                continue;
            }
            for (const double lr : grid.learning_rates) {
                for (const double dropout : grid.dropouts) {
                    for (const bool bf16 : grid.bf16) {
                        for (const auto seed : grid.seeds) {
                            RunConfig c;
                            c.model_id = model.model_id;
                            c.task = task;
                            c.learning_rate = lr;
                            c.dropout = dropout;
                            c.bf16 = bf16;
                            c.seed = seed;
                            c.split_seed = grid.split_seed;
                            c.epochs = grid.epochs;
                            c.batch_size = grid.batch_size;
                            c.scheduler = grid.scheduler;
                            c.warmup_ratio = grid.warmup_ratio;
                            c.adam_epsilon = grid.adam_epsilon;
                            c.weight_decay = grid.weight_decay;
                            c.run_key = compute_run_key(c);
                            out.push_back(std::move(c));
                        }
                    }
                }
            }
        }
    }
    return out;
}

void write_matrix(std::span<const RunConfig> configs, const fs::path& path) {
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        for (const auto& c : configs) {
            out << c.to_json().dump() << '\n';
        }
        out.flush();
        if (!out) {
            throw IoError("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::vector<RunConfig> read_matrix(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open matrix: " + path.string());
    }
    std::vector<RunConfig> out;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
        }
        try {
            out.push_back(RunConfig::from_json(j));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------- store

namespace {

std::string status_name(RunStatus s) { return s == RunStatus::done ? "done" : "failed"; }

bench::Metric parse_metric(std::string_view s) {
    for (auto m : {bench::Metric::accuracy, bench::Metric::f1, bench::Metric::pearson}) {
        if (bench::to_string(m) == s) {
            return m;
        }
    }
    throw DataError("unknown metric " + std::string(s));
}

void write_all(int fd, std::string_view data, const fs::path& path) {
    while (!data.empty()) {
        const auto n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw IoError("write failed: " + path.string() + ": " + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::string host_name() {
    char buf[256] = {};
    if (::gethostname(buf, sizeof buf - 1) != 0) {
        return "localhost";
    }
    return buf;
}

}  // namespace

ResultsStore::ResultsStore(const fs::path& dir) : dir_(dir), log_path_(dir / "results.jsonl"), claims_dir_(dir / "claims") {
    std::error_code ec;
    fs::create_directories(claims_dir_, ec);
    if (ec) {
        throw IoError("cannot create results store " + dir.string() + ": " + ec.message());
    }
    const int fd = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
        throw IoError("results store not writable: " + log_path_.string() + ": " + std::strerror(errno));
    }
    ::close(fd);
    refresh();
}

void ResultsStore::ingest_line(const std::string& line) {
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        spdlog::warn("results store: skipping unreadable line");
        return;
    }
    StoredRun r;
    try {
        r.config = RunConfig::from_json(j.at("config"));
        r.result.run_key = j.at("run_key").get<std::string>();
        r.result.status = j.at("status").get<std::string>() == "done" ? RunStatus::done : RunStatus::failed;
        r.result.metric = parse_metric(j.at("metric").get<std::string>());
        if (r.result.status == RunStatus::done) {
            r.result.dev_score = j.at("dev").get<double>();
            r.result.test_score = j.at("test").get<double>();
        }
        r.result.diagnostics = j.value("diagnostics", "");
    } catch (const std::exception& e) {
        spdlog::warn("results store: skipping malformed line: {}", e.what());
        return;
    }
    ++lines_;
    const auto it = latest_.find(r.result.run_key);
    if (it == latest_.end()) {
        order_.push_back(r.result.run_key);
        latest_.emplace(r.result.run_key, std::move(r));
    } else if (it->second.result.status != RunStatus::done) {
        // A done result is final; later lines for the same key never downgrade it.
        it->second = std::move(r);
    }
}

void ResultsStore::refresh() {
    std::lock_guard lock(mu_);
    refresh_locked();
}

void ResultsStore::refresh_locked() {
    std::ifstream in(log_path_, std::ios::binary);
    if (!in) {
        throw IoError("cannot read results store: " + log_path_.string());
    }
    in.seekg(static_cast<std::streamoff>(offset_));
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof()) {
            // Incomplete trailing line: an append in progress elsewhere. Re-read it next time.
            break;
        }
        offset_ += line.size() + 1;
        if (!line.empty()) {
            ingest_line(line);
        }
    }
}

bool ResultsStore::is_done(const std::string& run_key) const {
    std::lock_guard lock(mu_);
    const auto it = latest_.find(run_key);
    return it != latest_.end() && it->second.result.status == RunStatus::done;
}

std::optional<StoredRun> ResultsStore::latest(const std::string& run_key) const {
    std::lock_guard lock(mu_);
    const auto it = latest_.find(run_key);
    if (it == latest_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<StoredRun> ResultsStore::runs() const {
    std::lock_guard lock(mu_);
    std::vector<StoredRun> out;
    out.reserve(order_.size());
    for (const auto& k : order_) {
        out.push_back(latest_.at(k));
    }
    return out;
}

std::uint64_t ResultsStore::log_lines() const {
    std::lock_guard lock(mu_);
    return lines_;
}

void ResultsStore::append(const RunConfig& config, const RunResult& result) {
    ordered_json j;
    j["run_key"] = result.run_key;
    j["status"] = status_name(result.status);
    j["metric"] = bench::to_string(result.metric);
    if (result.status == RunStatus::done) {
        j["dev"] = result.dev_score;
        j["test"] = result.test_score;
    }
    if (!result.diagnostics.empty()) {
        j["diagnostics"] = result.diagnostics;
    }
    j["config"] = config.to_json();
    const std::string line = j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";

    std::lock_guard lock(mu_);
    const int fd = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd < 0) {
        throw IoError("results store not writable: " + log_path_.string() + ": " + std::strerror(errno));
    }
    try {
        write_all(fd, line, log_path_);
        if (::fsync(fd) != 0) {
            throw IoError("fsync failed: " + log_path_.string() + ": " + std::strerror(errno));
        }
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    // Pick up our own line (and anything appended before it).
    refresh_locked();
}

bool ResultsStore::try_claim(const std::string& run_key) {
    const auto path = claims_dir_ / (run_key + ".claim");
    const std::string me = host_name() + " " + std::to_string(::getpid());
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
        if (fd >= 0) {
            write_all(fd, me + "\n", path);
            ::close(fd);
            return true;
        }
        if (errno != EEXIST) {
            throw IoError("cannot create claim " + path.string() + ": " + std::strerror(errno));
        }
        // Held already. Reclaim only if the holder is a dead process on this host.
        std::ifstream in(path);
        std::string host;
        long pid = 0;
        if (!(in >> host >> pid) || host != host_name() || pid <= 0) {
            return false;
        }
        if (::kill(static_cast<pid_t>(pid), 0) == 0 || errno != ESRCH) {
            return false;
        }
        spdlog::info("reclaiming stale claim for {} held by dead pid {}", run_key, pid);
        std::error_code ec;
        fs::remove(path, ec);
    }
    return false;
}

void ResultsStore::release(const std::string& run_key) {
    std::error_code ec;
    fs::remove(claims_dir_ / (run_key + ".claim"), ec);
}

void ResultsStore::compact() {
    refresh();
    std::lock_guard lock(mu_);
    const auto tmp = fs::path(log_path_.string() + ".compact");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        for (const auto& k : order_) {
            const auto& r = latest_.at(k);
            ordered_json j;
            j["run_key"] = r.result.run_key;
            j["status"] = status_name(r.result.status);
            j["metric"] = bench::to_string(r.result.metric);
            if (r.result.status == RunStatus::done) {
                j["dev"] = r.result.dev_score;
                j["test"] = r.result.test_score;
            }
            if (!r.result.diagnostics.empty()) {
                j["diagnostics"] = r.result.diagnostics;
            }
            j["config"] = r.config.to_json();
            out << j.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
        }
        out.flush();
        if (!out) {
            throw IoError("compaction write failed: " + tmp.string());
        }
    }
    const int fd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
    fs::rename(tmp, log_path_);
    offset_ = fs::file_size(log_path_);
    lines_ = order_.size();
}

void ResultsStore::save_matrix(std::span<const RunConfig> configs) { write_matrix(configs, dir_ / "matrix.jsonl"); }

std::optional<std::vector<RunConfig>> ResultsStore::load_matrix() const {
    const auto path = dir_ / "matrix.jsonl";
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    return read_matrix(path);
}

// ---------------------------------------------------------------- execution

void check_trainer_template(std::string_view tmpl) {
    for (const auto p : kRequiredPlaceholders) {
        if (tmpl.find(p) == std::string_view::npos) {
            throw ConfigError("trainer command lacks placeholder " + std::string(p));
        }
    }
}

namespace {

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (const char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

bool in_range(double v, bench::Metric m) {
    if (!std::isfinite(v)) {
        return false;
    }
    return m == bench::Metric::pearson ? (v >= -1.0 && v <= 1.0) : (v >= 0.0 && v <= 1.0);
}

std::string tail(const std::string& s, std::size_t n) { return s.size() <= n ? s : s.substr(s.size() - n); }

}  // namespace

std::string render_command(std::string_view tmpl, const RunConfig& c) {
    std::string cmd(tmpl);
    replace_all(cmd, "{model_id}", shell_quote(c.model_id));
    replace_all(cmd, "{task}", shell_quote(bench::to_string(c.task)));
    replace_all(cmd, "{learning_rate}", shell_quote(format_number(c.learning_rate)));
    replace_all(cmd, "{dropout}", shell_quote(format_number(c.dropout)));
    replace_all(cmd, "{bf16}", shell_quote(c.bf16 ? "true" : "false"));
    replace_all(cmd, "{seed}", shell_quote(std::to_string(c.seed)));
    replace_all(cmd, "{split_seed}", shell_quote(std::to_string(c.split_seed)));
    replace_all(cmd, "{run_key}", shell_quote(c.run_key));
    replace_all(cmd, "{epochs}", shell_quote(std::to_string(c.epochs)));
    replace_all(cmd, "{batch_size}", shell_quote(std::to_string(c.batch_size)));
    replace_all(cmd, "{scheduler}", shell_quote(c.scheduler));
    replace_all(cmd, "{warmup_ratio}", shell_quote(format_number(c.warmup_ratio)));
    replace_all(cmd, "{adam_epsilon}", shell_quote(format_number(c.adam_epsilon)));
    replace_all(cmd, "{weight_decay}", shell_quote(format_number(c.weight_decay)));
    return cmd;
}

std::optional<std::pair<double, double>> parse_trainer_output(std::string_view output) {
    static const std::regex re(R"(^\s*dev=(\S+)\s+test=(\S+)\s*$)");
    std::optional<std::pair<double, double>> found;
    std::istringstream in{std::string(output)};
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, re)) {
            continue;
        }
        double dev = 0.0;
        double test = 0.0;
        const auto d = m[1].str();
        const auto t = m[2].str();
        const auto rd = std::from_chars(d.data(), d.data() + d.size(), dev);
        const auto rt = std::from_chars(t.data(), t.data() + t.size(), test);
        if (rd.ec != std::errc{} || rd.ptr != d.data() + d.size() || rt.ec != std::errc{} ||
            rt.ptr != t.data() + t.size()) {
            continue;
        }
        found = std::pair{dev, test};
    }
    return found;
}

namespace {

RunResult run_trainer(const RunConfig& c, std::string_view tmpl) {
    RunResult r;
    r.run_key = c.run_key;
    r.metric = bench::task_spec(c.task).metric;
    const std::string cmd = render_command(tmpl, c) + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        r.diagnostics = std::string("cannot start trainer: ") + std::strerror(errno);
        return r;
    }
    std::string output;
    char buf[4096];
    while (const auto n = std::fread(buf, 1, sizeof buf, pipe)) {
        output.append(buf, n);
    }
    const int status = ::pclose(pipe);
    const bool exited_ok = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
    if (!exited_ok) {
        std::string why = "trainer ";
        if (status != -1 && WIFEXITED(status)) {
            why += "exited with status " + std::to_string(WEXITSTATUS(status));
        } else if (status != -1 && WIFSIGNALED(status)) {
            why += "killed by signal " + std::to_string(WTERMSIG(status));
        } else {
            why += "wait failed";
        }
        r.diagnostics = why + "\n" + tail(output, 4000);
        return r;
    }
    const auto scores = parse_trainer_output(output);
    if (!scores) {
        r.diagnostics = "trainer output lacks a 'dev=<float> test=<float>' line\n" + tail(output, 4000);
        return r;
    }
    if (!in_range(scores->first, r.metric) || !in_range(scores->second, r.metric)) {
        r.diagnostics = "scores out of range for " + std::string(bench::to_string(r.metric)) + ": dev=" +
                        format_number(scores->first) + " test=" + format_number(scores->second);
        return r;
    }
    r.dev_score = scores->first;
    r.test_score = scores->second;
    r.status = RunStatus::done;
    return r;
}

}  // namespace

ExecuteSummary execute(std::span<const RunConfig> configs, std::string_view trainer_template, std::size_t workers,
                       ResultsStore& store) {
    check_trainer_template(trainer_template);
    store.refresh();

    std::vector<const RunConfig*> todo;
    std::set<std::string> queued;
    ExecuteSummary summary;
    for (const auto& c : configs) {
        if (store.is_done(c.run_key)) {
            ++summary.already_done;
        } else if (queued.insert(c.run_key).second) {
            todo.push_back(&c);
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::uint64_t> executed{0}, done{0}, failed{0}, busy{0}, late_done{0};
    std::mutex err_mu;
    std::exception_ptr fatal;
    std::atomic<bool> abort{false};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size() || abort.load()) {
                return;
            }
            const RunConfig& c = *todo[i];
            try {
                if (!store.try_claim(c.run_key)) {
                    ++busy;
                    continue;
                }
                // Another orchestrator may have finished this key since we planned.
                store.refresh();
                if (store.is_done(c.run_key)) {
                    store.release(c.run_key);
                    ++late_done;
                    continue;
                }
                ++executed;
                const auto result = run_trainer(c, trainer_template);
                try {
                    store.append(c, result);
                } catch (...) {
                    store.release(c.run_key);
                    throw;
                }
                store.release(c.run_key);
                if (result.status == RunStatus::done) {
                    ++done;
                } else {
                    ++failed;
                    spdlog::warn("run {} ({} {}) failed: {}", c.run_key, c.model_id, bench::to_string(c.task),
                                 result.diagnostics.substr(0, result.diagnostics.find('\n')));
                }
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!fatal) {
                    fatal = std::current_exception();
                }
                abort = true;
                return;
            }
        }
    };

    const std::size_t n = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, todo.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n && !todo.empty(); ++w) {
            pool.emplace_back(worker);
        }
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }
    summary.executed = executed;
    summary.done = done;
    summary.failed = failed;
    summary.busy = busy;
    summary.already_done += late_done;

    store.refresh();
    if (store.log_lines() > 2 * std::max<std::size_t>(store.runs().size(), 64)) {
        store.compact();
    }
    return summary;
}

// ---------------------------------------------------------------- aggregation

const Cell* Report::cell(const std::string& model, bench::TaskName task) const {
    const auto it = cells.find({model, task});
    return it == cells.end() ? nullptr : &it->second;
}

namespace {

struct Combo {
    double lr;
    double dropout;
    bool bf16;
    auto operator<=>(const Combo&) const = default;
};

std::string format4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string cell_text(const Cell* c) { return (c != nullptr && c->score) ? format4(*c->score) : "n.a."; }

}  // namespace

Report aggregate(std::span<const StoredRun> runs, std::span<const RunConfig> planned) {
    std::map<std::string, const StoredRun*> by_key;
    for (const auto& r : runs) {
        by_key[r.result.run_key] = &r;
    }

    Report report;
    std::map<std::pair<std::string, bench::TaskName>, std::vector<const RunConfig*>> groups;
    std::set<bench::TaskName> task_set;
    for (const auto& c : planned) {
        if (std::find(report.models.begin(), report.models.end(), c.model_id) == report.models.end()) {
            report.models.push_back(c.model_id);
        }
        task_set.insert(c.task);
        groups[{c.model_id, c.task}].push_back(&c);
    }
    for (const auto& spec : bench::all_tasks()) {
        if (task_set.contains(spec.name)) {
            report.tasks.push_back(spec.name);
        }
    }

    for (const auto& model : report.models) {
        for (const auto task : report.tasks) {
            Cell cell;
            const auto g = groups.find({model, task});
            if (g == groups.end()) {
                cell.deficit = "not in matrix";
                report.cells[{model, task}] = cell;
                continue;
            }
            std::map<Combo, std::vector<const RunResult*>> combos;
            std::size_t missing = 0;
            std::size_t failed = 0;
            for (const RunConfig* c : g->second) {
                const auto it = by_key.find(c->run_key);
                auto& slot = combos[{c->learning_rate, c->dropout, c->bf16}];
                if (it == by_key.end()) {
                    ++missing;
                } else if (it->second->result.status != RunStatus::done) {
                    ++failed;
                } else {
                    slot.push_back(&it->second->result);
                }
            }
            if (missing + failed > 0) {
                cell.deficit = std::to_string(missing + failed) + " of " + std::to_string(g->second.size()) +
                               " runs not done (" + std::to_string(missing) + " missing, " + std::to_string(failed) +
                               " failed)";
                report.cells[{model, task}] = cell;
                continue;
            }
            // std::map iterates combos by (lr, dropout, bf16) ascending, so a strict
            // comparison keeps the lexicographically smallest among equal dev means.
            bool have = false;
            for (const auto& [combo, results] : combos) {
                double dev = 0.0;
                double test = 0.0;
                for (const auto* r : results) {
                    dev += r->dev_score;
                    test += r->test_score;
                }
                dev /= static_cast<double>(results.size());
                test /= static_cast<double>(results.size());
                if (!have || dev > cell.mean_dev) {
                    have = true;
                    cell.mean_dev = dev;
                    cell.score = test;
                    cell.learning_rate = combo.lr;
                    cell.dropout = combo.dropout;
                    cell.bf16 = combo.bf16;
                }
            }
            report.cells[{model, task}] = cell;
        }
    }
    return report;
}

std::string Report::render_table() const {
    std::vector<std::string> header{"model"};
    for (const auto t : tasks) {
        header.emplace_back(bench::to_string(t));
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : models) {
        std::vector<std::string> row{m};
        for (const auto t : tasks) {
            row.push_back(cell_text(cell(m, t)));
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) {
        width[i] = header[i].size();
        for (const auto& r : rows) {
            width[i] = std::max(width[i], r[i].size());
        }
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i == 0) {
                out << r[i] << std::string(width[i] - r[i].size(), ' ');
            } else {
                out << "  " << std::string(width[i] - r[i].size(), ' ') << r[i];
            }
        }
        out << '\n';
    };
    emit(header);
    std::size_t total = 0;
    for (const auto w : width) {
        total += w;
    }
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& r : rows) {
        emit(r);
    }

    bool any = false;
    for (const auto& m : models) {
        for (const auto t : tasks) {
            const Cell* c = cell(m, t);
            if (c != nullptr && !c->score && c->deficit != "not in matrix") {
                if (!any) {
                    out << "\nn.a. cells:\n";
                    any = true;
                }
                out << "  " << m << " / " << bench::to_string(t) << ": " << c->deficit << '\n';
            }
        }
    }
    return out.str();
}

std::string Report::render_tsv() const {
    std::ostringstream out;
    out << "model\ttask\tmetric\tscore\tlearning_rate\tdropout\tbf16\tmean_dev\tdeficit\n";
    for (const auto& m : models) {
        for (const auto t : tasks) {
            const Cell* c = cell(m, t);
            out << m << '\t' << bench::to_string(t) << '\t' << bench::to_string(bench::task_spec(t).metric) << '\t'
                << cell_text(c) << '\t';
            if (c != nullptr && c->score) {
                out << format_number(c->learning_rate) << '\t' << format_number(c->dropout) << '\t' << (c->bf16 ? 1 : 0)
                    << '\t' << format4(c->mean_dev) << '\t';
            } else {
                out << "\t\t\t\t" << (c != nullptr ? c->deficit : "");
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace ptkit::experiments
