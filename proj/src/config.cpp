#include "ptkit/config.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "ptkit/error.hpp"

namespace ptkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& section, std::string_view name, std::initializer_list<std::string_view> allowed) {
    if (!section.is_object()) {
        throw ConfigError("config section '" + std::string(name) + "' must be an object");
    }
    for (const auto& [key, value] : section.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("config: unknown key '" + std::string(name) + "." + key + "'");
        }
    }
}

fs::path existing_path(const json& value, const fs::path& base, std::string_view key) {
    fs::path p(value.get<std::string>());
    if (p.is_relative() && !base.empty()) {
        p = base / p;
    }
    if (!fs::exists(p)) {
        throw ConfigError("config: " + std::string(key) + " refers to missing path " + p.string());
    }
    return p;
}

std::set<corpus::Source> source_set(const json& value, std::string_view key) {
    std::set<corpus::Source> out;
    for (const auto& s : value.get<std::vector<std::string>>()) {
        const auto src = corpus::try_parse_source(s);
        if (!src) {
            throw ConfigError("config: " + std::string(key) + ": unknown source '" + s + "'");
        }
        out.insert(*src);
    }
    return out;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    const auto j = json::parse(in, nullptr, false, true);
    if (j.is_discarded()) {
        throw ConfigError("config file is not valid JSON: " + path.string());
    }
    auto cfg = from_json(j, path.parent_path());
    cfg.file = path;
    return cfg;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
    PipelineConfig cfg;
    reject_unknown(j, "<root>", {"global", "variant_split", "curation", "tokpack", "benchprep", "experiments"});
    try {
        if (j.contains("global")) {
            const auto& g = j["global"];
            reject_unknown(g, "global", {"log_level", "workers"});
            cfg.log_level = g.value("log_level", cfg.log_level);
            cfg.workers = g.value("workers", cfg.workers);
        }
        if (j.contains("variant_split")) {
            const auto& v = j["variant_split"];
            reject_unknown(v, "variant_split", {"urlless_ptpt_sources"});
            if (v.contains("urlless_ptpt_sources")) {
                cfg.routing.urlless_ptpt_sources = source_set(v["urlless_ptpt_sources"], "variant_split.urlless_ptpt_sources");
            }
        }
        if (j.contains("curation")) {
            const auto& c = j["curation"];
            if (!c.is_object()) {
                throw ConfigError("config section 'curation' must be an object");
            }
            json filters = json::object();
            for (const auto& [key, value] : c.items()) {
                if (key == "blocklist") {
                    cfg.blocklist_path = existing_path(value, base, "curation.blocklist");
                } else if (key == "quality_exempt_sources") {
                    cfg.curation.quality_exempt_sources = source_set(value, "curation.quality_exempt_sources");
                } else {
                    filters[key] = value;
                }
            }
            for (const char* key : {"stopword_file", "flagged_word_file"}) {
                if (filters.contains(key)) {
                    existing_path(filters[key], base, std::string("curation.") + key);
                }
            }
            cfg.curation.filters = curation::filter_config_from_json(filters, curation::FilterConfig::defaults(), base);
            if (cfg.blocklist_path) {
                cfg.curation.blocklist = curation::Blocklist::load(*cfg.blocklist_path);
            }
        }
        if (j.contains("tokpack")) {
            const auto& t = j["tokpack"];
            reject_unknown(t, "tokpack", {"vocab", "schedule", "global_batch", "devices", "chunk_records"});
            if (t.contains("vocab")) cfg.vocab = existing_path(t["vocab"], base, "tokpack.vocab");
            if (t.contains("schedule")) cfg.schedule = tokpack::TruncationSchedule::parse(t["schedule"].get<std::string>());
            cfg.global_batch = t.value("global_batch", cfg.global_batch);
            cfg.devices = t.value("devices", cfg.devices);
            cfg.chunk_records = t.value("chunk_records", cfg.chunk_records);
            if (cfg.chunk_records == 0) {
                throw ConfigError("config: tokpack.chunk_records must be positive");
            }
            tokpack::plan_device_split(cfg.global_batch, cfg.devices);
        }
        if (j.contains("benchprep")) {
            const auto& b = j["benchprep"];
            reject_unknown(b, "benchprep", {"split_seed", "translate_batch_size", "translate_max_attempts", "translation_cache"});
            cfg.split_seed = b.value("split_seed", cfg.split_seed);
            cfg.translate_batch_size = b.value("translate_batch_size", cfg.translate_batch_size);
            cfg.translate_max_attempts = b.value("translate_max_attempts", cfg.translate_max_attempts);
            if (b.contains("translation_cache")) {
                fs::path p(b["translation_cache"].get<std::string>());
                cfg.translation_cache = p.is_relative() && !base.empty() ? base / p : p;
            }
            if (cfg.translate_batch_size == 0 || cfg.translate_max_attempts < 1) {
                throw ConfigError("config: benchprep batch size and attempts must be positive");
            }
        }
        if (j.contains("experiments")) {
            const auto& e = j["experiments"];
            reject_unknown(e, "experiments", {"grid", "models", "tasks", "trainer"});
            if (e.contains("grid")) cfg.grid = experiments::HyperGrid::from_json(e["grid"]);
            if (e.contains("models")) cfg.models = existing_path(e["models"], base, "experiments.models");
            if (e.contains("tasks")) cfg.tasks = existing_path(e["tasks"], base, "experiments.tasks");
            if (e.contains("trainer")) {
                cfg.trainer = e["trainer"].get<std::string>();
                experiments::check_trainer_template(*cfg.trainer);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

std::size_t PipelineConfig::cap_workers(std::size_t requested) const noexcept {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t global = workers == 0 ? hw : workers;
    return requested == 0 ? global : std::min(requested, global);
}

}  // namespace ptkit
