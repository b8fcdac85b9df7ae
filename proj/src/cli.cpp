#include "ptkit/cli.hpp"

#include <omp.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "ptkit/benchprep.hpp"
#include "ptkit/config.hpp"
#include "ptkit/corpus_io.hpp"
#include "ptkit/curation.hpp"
#include "ptkit/error.hpp"
#include "ptkit/experiments.hpp"
#include "ptkit/metrics.hpp"
#include "ptkit/pack.hpp"
#include "ptkit/stats.hpp"
#include "ptkit/translate.hpp"
#include "ptkit/variant_split.hpp"

#ifndef PTKIT_VERSION
#define PTKIT_VERSION "0.0.0"
#endif

namespace ptkit::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_path;
    std::string log_level;
    std::size_t workers = 0;
};

// Reads records in chunks so memory stays bounded by the chunk size.
template <typename Fn>
void for_each_chunk(corpus::RecordReader& reader, std::size_t chunk, Fn&& fn) {
    std::vector<corpus::CorpusRecord> buf;
    buf.reserve(chunk);
    while (auto rec = reader.next()) {
        buf.push_back(std::move(*rec));
        if (buf.size() >= chunk) {
            fn(std::span<const corpus::CorpusRecord>(buf));
            buf.clear();
        }
    }
    if (!buf.empty()) {
        fn(std::span<const corpus::CorpusRecord>(buf));
    }
}

void report_malformed(std::ostream& err, const fs::path& path, const corpus::IngestReport& r) {
    if (r.records_malformed > 0) {
        err << path.string() << ": skipped " << r.records_malformed << " malformed line(s)\n";
    }
}

class OfflineTranslator final : public translate::TranslationService {
public:
    std::vector<std::string> translate_batch(std::span<const std::string> texts, bench::Variant target) override {
        std::vector<std::string> out;
        const std::string tag = target == bench::Variant::PTPT ? "[pt-PT] " : "[pt-BR] ";
        for (const auto& t : texts) {
            out.push_back(tag + t);
        }
        return out;
    }
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ptkit: corpus curation, packing and benchmark tooling for European Portuguese encoders", "ptkit"};
    app.set_version_flag("--version", PTKIT_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Pipeline configuration file (JSON, comments allowed)");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");
    app.add_option("--workers", g.workers, "Worker threads (caps every pool; default: config or all cores)");

    PipelineConfig cfg;
    std::function<int()> action;
    auto add = [&](const std::string& name, const std::string& desc) {
        auto* sub = app.add_subcommand(name, desc);
        sub->set_version_flag("--version", PTKIT_VERSION);
        return sub;
    };

    // ingest
    std::vector<std::string> ingest_in;
    std::string ingest_out, ingest_format = "jsonl", ingest_source = "Other";
    {
        auto* sub = add("ingest", "Normalize raw corpus files into line-delimited records");
        sub->add_option("--in", ingest_in, "Input files")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", ingest_out, "Output records file")->required();
        sub->add_option("--format", ingest_format, "jsonl or text (blank-line separated documents)")
            ->check(CLI::IsMember({"jsonl", "text"}));
        sub->add_option("--source", ingest_source, "Source for records that do not name one");
        sub->callback([&] {
            action = [&] {
                corpus::ReaderOptions opts;
                opts.format = ingest_format == "text" ? corpus::InputFormat::plain_text_blocks : corpus::InputFormat::line_delimited;
                const auto src = corpus::try_parse_source(ingest_source);
                if (!src) {
                    throw ConfigError("unknown source: " + ingest_source);
                }
                opts.default_source = *src;
                corpus::RecordWriter writer(ingest_out);
                std::uint64_t malformed = 0;
                for (const auto& in : ingest_in) {
                    corpus::RecordReader reader(in, opts);
                    while (auto rec = reader.next()) {
                        writer.write(*rec);
                    }
                    report_malformed(err, in, reader.report());
                    malformed += reader.report().records_malformed;
                }
                writer.close();
                err << "ingest: wrote " << writer.count() << " records, skipped " << malformed << " malformed\n";
                return int{kOk};
            };
        });
    }

    // split-variant
    std::string sv_in, sv_ptpt, sv_ptbr, sv_discard;
    {
        auto* sub = add("split-variant", "Route records to PTPT / PTBR / discard by URL domain and source");
        sub->add_option("--in", sv_in, "Input records")->required()->check(CLI::ExistingFile);
        sub->add_option("--out-ptpt", sv_ptpt, "European Portuguese output")->required();
        sub->add_option("--out-ptbr", sv_ptbr, "Brazilian Portuguese output")->required();
        sub->add_option("--out-discard", sv_discard, "Discarded records")->required();
        sub->callback([&] {
            action = [&] {
                corpus::RecordReader reader(sv_in);
                corpus::RecordWriter ptpt(sv_ptpt), ptbr(sv_ptbr), discard(sv_discard);
                for_each_chunk(reader, cfg.chunk_records, [&](std::span<const corpus::CorpusRecord> recs) {
                    const auto labels = variant::route_batch(recs, cfg.routing);
                    for (std::size_t i = 0; i < recs.size(); ++i) {
                        switch (labels[i]) {
                            case variant::VariantLabel::PTPT: ptpt.write(recs[i]); break;
                            case variant::VariantLabel::PTBR: ptbr.write(recs[i]); break;
                            case variant::VariantLabel::Discard: discard.write(recs[i]); break;
                        }
                    }
                });
                ptpt.close();
                ptbr.close();
                discard.close();
                report_malformed(err, sv_in, reader.report());
                err << "split-variant: ptpt " << ptpt.count() << ", ptbr " << ptbr.count() << ", discard "
                    << discard.count() << "\n";
                return int{kOk};
            };
        });
    }

    // curate
    std::string cu_in, cu_out, cu_rejects, cu_blocklist;
    {
        auto* sub = add("curate", "Apply quality filters and the domain blocklist");
        sub->add_option("--in", cu_in, "Input records")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", cu_out, "Kept records")->required();
        sub->add_option("--rejects", cu_rejects, "Per-record decisions for rejected records");
        sub->add_option("--blocklist", cu_blocklist, "Blocklist file (overrides the config)")->check(CLI::ExistingFile);
        sub->callback([&] {
            action = [&] {
                auto policy = cfg.curation;
                if (!cu_blocklist.empty()) {
                    policy.blocklist = curation::Blocklist::load(cu_blocklist);
                }
                corpus::RecordReader reader(cu_in);
                corpus::RecordWriter kept(cu_out);
                std::optional<std::ofstream> rejects;
                if (!cu_rejects.empty()) {
                    rejects = open_out(cu_rejects);
                }
                std::map<std::string, std::uint64_t> by_reason;
                std::uint64_t rejected = 0;
                for_each_chunk(reader, cfg.chunk_records, [&](std::span<const corpus::CorpusRecord> recs) {
                    const auto verdicts = curation::curate_batch(recs, policy);
                    for (std::size_t i = 0; i < recs.size(); ++i) {
                        if (verdicts[i].keep) {
                            kept.write(recs[i]);
                            continue;
                        }
                        ++rejected;
                        ++by_reason[verdicts[i].rejected_by];
                        if (rejects) {
                            *rejects << curation::verdict_to_json(recs[i], verdicts[i])
                                            .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)
                                     << '\n';
                        }
                    }
                });
                kept.close();
                if (rejects) {
                    rejects->flush();
                    if (!*rejects) {
                        throw IoError("write failed: " + cu_rejects);
                    }
                }
                report_malformed(err, cu_in, reader.report());
                err << "curate: kept " << kept.count() << ", rejected " << rejected;
                for (const auto& [reason, n] : by_reason) {
                    err << " " << reason << "=" << n;
                }
                err << "\n";
                return int{kOk};
            };
        });
    }

    // dedup
    std::string dd_in, dd_out;
    {
        auto* sub = add("dedup", "Drop exact duplicates (whitespace-normalized text), keeping first occurrences");
        sub->add_option("--in", dd_in, "Input records")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", dd_out, "Unique records")->required();
        sub->callback([&] {
            action = [&] {
                corpus::RecordReader reader(dd_in);
                corpus::RecordWriter writer(dd_out);
                curation::Deduplicator dedup;
                while (auto rec = reader.next()) {
                    if (dedup.admit(rec->text)) {
                        writer.write(*rec);
                    }
                }
                writer.close();
                report_malformed(err, dd_in, reader.report());
                err << "dedup: kept " << dedup.unique() << ", dropped " << dedup.duplicates() << " duplicates\n";
                return int{kOk};
            };
        });
    }

    // stats
    std::vector<std::string> st_in;
    std::string st_scale = "unit", st_tsv, st_format = "table";
    {
        auto* sub = add("stats", "Count examples and words per dataset");
        sub->add_option("--in", st_in, "Record files, one dataset each")->required()->check(CLI::ExistingFile);
        sub->add_option("--scale", st_scale, "unit or millions (examples in millions, words in billions)")
            ->check(CLI::IsMember({"unit", "millions"}));
        sub->add_option("--tsv-out", st_tsv, "Also write raw counts as TSV to this file");
        sub->add_option("--format", st_format, "table or tsv on standard output")->check(CLI::IsMember({"table", "tsv"}));
        sub->callback([&] {
            action = [&] {
                std::vector<stats::CorpusStats> rows;
                for (const auto& in : st_in) {
                    corpus::RecordReader reader(in);
                    stats::StatsAccumulator acc(fs::path(in).stem().string());
                    for_each_chunk(reader, cfg.chunk_records, [&](std::span<const corpus::CorpusRecord> recs) {
                        acc.add(recs);
                    });
                    report_malformed(err, in, reader.report());
                    rows.push_back(acc.result());
                }
                if (st_format == "tsv") {
                    out << stats::render_tsv(rows);
                } else {
                    out << stats::render_report(rows, st_scale == "millions" ? stats::Scale::millions_billions
                                                                            : stats::Scale::unit);
                }
                if (!st_tsv.empty()) {
                    auto f = open_out(st_tsv);
                    f << stats::render_tsv(rows);
                }
                return int{kOk};
            };
        });
    }

    // pack
    std::string pk_in, pk_vocab, pk_schedule, pk_out;
    std::uint64_t pk_batch = 0, pk_devices = 0;
    bool pk_pretok = false;
    {
        auto* sub = add("pack", "Tokenize, truncate and pack records into per-stage binary shards");
        sub->add_option("--in", pk_in, "Input records")->required()->check(CLI::ExistingFile);
        sub->add_option("--vocab", pk_vocab, "Vocabulary file (default: config tokpack.vocab)");
        sub->add_option("--schedule", pk_schedule, "Stages as len:steps,... (default: config or 128:250000,256:80000,512:60000)");
        sub->add_option("--batch", pk_batch, "Global batch size");
        sub->add_option("--devices", pk_devices, "Device count");
        sub->add_option("--out", pk_out, "Output directory")->required();
        sub->add_flag("--pretokenized", pk_pretok, "Input lines are {\"token_ids\": [...]}");
        sub->callback([&] {
            action = [&] {
                fs::path vocab_path;
                if (!pk_vocab.empty()) {
                    vocab_path = pk_vocab;
                } else if (cfg.vocab) {
                    vocab_path = *cfg.vocab;
                } else {
                    throw ConfigError("pack: no vocabulary (use --vocab or tokpack.vocab)");
                }
                if (!fs::exists(vocab_path)) {
                    throw ConfigError("vocabulary not found: " + vocab_path.string());
                }
                const auto vocab = tokpack::Vocabulary::load(vocab_path);
                tokpack::PackOptions opts;
                opts.schedule = pk_schedule.empty() ? cfg.schedule : tokpack::TruncationSchedule::parse(pk_schedule);
                opts.global_batch = pk_batch != 0 ? pk_batch : cfg.global_batch;
                opts.devices = pk_devices != 0 ? pk_devices : cfg.devices;
                opts.chunk_records = cfg.chunk_records;
                opts.pretokenized = pk_pretok;
                const auto summary = tokpack::pack_corpus(pk_in, vocab, opts, pk_out);
                out << summary.to_json(opts).dump(2) << '\n';
                if (summary.malformed > 0) {
                    err << "pack: skipped " << summary.malformed << " malformed line(s)\n";
                }
                return int{kOk};
            };
        });
    }

    // split
    std::string sp_task, sp_in, sp_train, sp_dev;
    std::optional<std::uint64_t> sp_seed;
    {
        auto* sub = add("split", "Seeded 90/10 train/dev split of a task's training data");
        sub->add_option("--task", sp_task, "Task name")->required();
        sub->add_option("--in", sp_in, "Task examples")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", sp_seed, "Split seed (default: config benchprep.split_seed)");
        sub->add_option("--out-train", sp_train, "Train output")->required();
        sub->add_option("--out-dev", sp_dev, "Dev output")->required();
        sub->callback([&] {
            action = [&] {
                const auto& spec = bench::task_spec(bench::parse_task(sp_task));
                bench::ValidationReport report;
                const auto examples = bench::read_task_file(sp_in, spec, &report);
                if (!report.violations.empty()) {
                    err << "split: " << report.violations.size() << " schema violation(s) in " << sp_in
                        << "; run validate for details\n";
                    return int{kDataError};
                }
                const auto res = bench::split_90_10(examples, sp_seed.value_or(cfg.split_seed));
                bench::write_task_file(res.train, spec, sp_train);
                bench::write_task_file(res.dev, spec, sp_dev);
                err << "split: train " << res.train.size() << ", dev " << res.dev.size() << " (seed " << res.seed << ")\n";
                return int{kOk};
            };
        });
    }

    // translate
    std::string tr_task, tr_target, tr_in, tr_out, tr_cache, tr_rejects;
    std::size_t tr_batch = 0;
    bool tr_offline = false;
    {
        auto* sub = add("translate", "Machine-translate a task's text fields (credentials from DEEPL_AUTH_KEY)");
        sub->add_option("--task", tr_task, "Task name")->required();
        sub->add_option("--target", tr_target, "ptpt or ptbr")->required();
        sub->add_option("--in", tr_in, "English task examples")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", tr_out, "Translated examples")->required();
        sub->add_option("--cache", tr_cache, "Translation cache directory (default: config benchprep.translation_cache)");
        sub->add_option("--rejects", tr_rejects, "Examples that could not be translated (default: <out>.rejects.jsonl)");
        sub->add_option("--batch-size", tr_batch, "Strings per request");
        sub->add_flag("--offline", tr_offline, "Use a local stand-in that tags text instead of calling the service");
        sub->callback([&] {
            action = [&] {
                const auto& spec = bench::task_spec(bench::parse_task(tr_task));
                const auto target = bench::parse_variant(tr_target);
                bench::ValidationReport report;
                const auto examples = bench::read_task_file(tr_in, spec, &report);
                if (!report.violations.empty()) {
                    err << "translate: " << report.violations.size() << " schema violation(s) in " << tr_in << "\n";
                    return int{kDataError};
                }
                fs::path cache_dir = tr_cache.empty() ? cfg.translation_cache.value_or(fs::path{}) : fs::path(tr_cache);
                translate::TranslationCache cache(cache_dir);
                std::unique_ptr<translate::TranslationService> service;
                if (tr_offline) {
                    service = std::make_unique<OfflineTranslator>();
                } else {
                    service = std::make_unique<translate::DeepLClient>(translate::DeepLClient::from_environment());
                }
                translate::TranslateOptions opts;
                opts.batch_size = tr_batch != 0 ? tr_batch : cfg.translate_batch_size;
                opts.workers = cfg.cap_workers(4);
                opts.retry.max_attempts = cfg.translate_max_attempts;
                const auto res = translate::translate_dataset(examples, spec, target, *service, cache, opts);
                bench::write_task_file(res.translated, spec, tr_out);
                err << "translate: " << res.translated.size() << " translated, " << res.rejects.size() << " rejected, "
                    << res.stats.requests << " request(s), " << res.stats.cache_hits << " cache hit(s)\n";
                if (!res.rejects.empty()) {
                    const fs::path rej = tr_rejects.empty() ? fs::path(tr_out + ".rejects.jsonl") : fs::path(tr_rejects);
                    auto f = open_out(rej);
                    for (const auto& r : res.rejects) {
                        nlohmann::ordered_json j;
                        j["example"] = bench::task_example_to_json(r.example, spec);
                        j["reason"] = r.reason;
                        f << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
                    }
                    return int{kDataError};
                }
                return int{kOk};
            };
        });
    }

    // validate
    std::string va_task, va_in;
    {
        auto* sub = add("validate", "Check a task file against the task schema");
        sub->add_option("--task", va_task, "Task name")->required();
        sub->add_option("--in", va_in, "Task examples")->required()->check(CLI::ExistingFile);
        sub->callback([&] {
            action = [&] {
                const auto& spec = bench::task_spec(bench::parse_task(va_task));
                const auto report = bench::validate_task_file(va_in, spec);
                for (const auto& v : report.violations) {
                    err << va_in << ":" << v.line << ": " << (v.example_id.empty() ? "?" : v.example_id);
                    if (!v.field.empty()) {
                        err << ": " << v.field;
                    }
                    err << ": " << v.message << "\n";
                }
                err << "validate: " << report.valid << " valid, " << report.violations.size() << " violation(s)\n";
                return int{report.violations.empty() ? kOk : kDataError};
            };
        });
    }

    // matrix
    std::string mx_models, mx_tasks, mx_grid, mx_out;
    {
        auto* sub = add("matrix", "Enumerate the fine-tuning run matrix");
        sub->add_option("--models", mx_models, "Model roster (default: config experiments.models)");
        sub->add_option("--tasks", mx_tasks, "Task list (default: config experiments.tasks)");
        sub->add_option("--grid", mx_grid, "Grid override file")->check(CLI::ExistingFile);
        sub->add_option("--out", mx_out, "Matrix output (one run config per line)")->required();
        sub->callback([&] {
            action = [&] {
                auto pick = [](const std::string& flag, const std::optional<fs::path>& fallback, const char* what) {
                    if (!flag.empty()) {
                        if (!fs::exists(flag)) {
                            throw ConfigError(std::string(what) + " file not found: " + flag);
                        }
                        return fs::path(flag);
                    }
                    if (!fallback) {
                        throw ConfigError(std::string("matrix: no ") + what + " roster (use --" + what + ")");
                    }
                    return *fallback;
                };
                const auto models = experiments::load_models(pick(mx_models, cfg.models, "models"));
                const auto tasks = experiments::load_tasks(pick(mx_tasks, cfg.tasks, "tasks"));
                auto grid = cfg.grid;
                if (!mx_grid.empty()) {
                    std::ifstream in(mx_grid);
                    const auto j = nlohmann::json::parse(in, nullptr, false, true);
                    if (j.is_discarded()) {
                        throw ConfigError("grid file is not valid JSON: " + mx_grid);
                    }
                    grid = experiments::HyperGrid::from_json(j);
                }
                const auto configs = experiments::build_matrix(models, tasks, grid);
                experiments::write_matrix(configs, mx_out);
                err << "matrix: " << configs.size() << " run configs (" << models.size() << " models, " << tasks.size()
                    << " tasks, " << grid.runs_per_cell() << " runs per cell)\n";
                return int{kOk};
            };
        });
    }

    // run
    std::string rn_matrix, rn_trainer, rn_store;
    std::size_t rn_workers = 0;
    {
        auto* sub = add("run", "Execute pending runs through the trainer command");
        sub->add_option("--matrix", rn_matrix, "Matrix file")->required()->check(CLI::ExistingFile);
        sub->add_option("--trainer", rn_trainer,
                        "Command template with {model_id} {task} {learning_rate} {dropout} {bf16} {seed} {split_seed} {run_key}");
        sub->add_option("--store", rn_store, "Results store directory")->required();
        // Shadows the global --workers for this subcommand; both are capped the same way.
        sub->add_option("--workers", rn_workers, "Concurrent trainer processes");
        sub->callback([&] {
            action = [&] {
                std::string trainer = rn_trainer.empty() ? cfg.trainer.value_or("") : rn_trainer;
                if (trainer.empty()) {
                    throw ConfigError("run: no trainer command (use --trainer or experiments.trainer)");
                }
                const auto configs = experiments::read_matrix(rn_matrix);
                experiments::ResultsStore store(rn_store);
                store.save_matrix(configs);
                const auto s = experiments::execute(configs, trainer, cfg.cap_workers(rn_workers), store);
                err << "run: executed " << s.executed << ", done " << s.done << ", failed " << s.failed
                    << ", already done " << s.already_done << ", claimed elsewhere " << s.busy << "\n";
                return int{s.failed == 0 ? kOk : kDataError};
            };
        });
    }

    // report
    std::string rp_store, rp_format = "table";
    {
        auto* sub = add("report", "Seed-averaged, best-on-dev score table");
        sub->add_option("--store", rp_store, "Results store directory")->required()->check(CLI::ExistingDirectory);
        sub->add_option("--format", rp_format, "table or tsv")->check(CLI::IsMember({"table", "tsv"}));
        sub->callback([&] {
            action = [&] {
                experiments::ResultsStore store(rp_store);
                const auto runs = store.runs();
                std::vector<experiments::RunConfig> planned;
                if (auto m = store.load_matrix()) {
                    planned = std::move(*m);
                } else {
                    for (const auto& r : runs) {
                        planned.push_back(r.config);
                    }
                }
                const auto report = experiments::aggregate(runs, planned);
                out << (rp_format == "tsv" ? report.render_tsv() : report.render_table());
                return int{kOk};
            };
        });
    }

    // score
    std::string sc_task, sc_gold, sc_pred;
    {
        auto* sub = add("score", "Score predictions against gold labels");
        sub->add_option("--task", sc_task, "Task name")->required();
        sub->add_option("--gold", sc_gold, "Gold task examples")->required()->check(CLI::ExistingFile);
        sub->add_option("--pred", sc_pred, "Predictions ({\"example_id\", \"label\"} per line)")->required()->check(CLI::ExistingFile);
        sub->callback([&] {
            action = [&] {
                const auto& spec = bench::task_spec(bench::parse_task(sc_task));
                out << metrics::format_score(metrics::score_files(spec, sc_gold, sc_pred)) << '\n';
                return int{kOk};
            };
        });
    }

    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("ptkit", sink);
    logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e %l %v");
    // The sink points at `err`, which may not outlive this call.
    struct LoggerScope {
        std::shared_ptr<spdlog::logger> previous = spdlog::default_logger();
        ~LoggerScope() { spdlog::set_default_logger(previous); }
    } logger_scope;
    spdlog::set_default_logger(logger);

    try {
        std::vector<const char*> argv{"ptkit"};
        for (const auto& a : args) {
            argv.push_back(a.c_str());
        }
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kConfigError;
    }

    try {
        if (!g.config_path.empty()) {
            cfg = PipelineConfig::load(g.config_path);
        }
        if (g.workers != 0) {
            cfg.workers = g.workers;
        }
        const std::string level = g.log_level.empty() ? cfg.log_level : g.log_level;
        const auto lvl = spdlog::level::from_str(level);
        if (lvl == spdlog::level::off && level != "off") {
            throw ConfigError("unknown log level: " + level);
        }
        logger->set_level(lvl);
        omp_set_num_threads(static_cast<int>(cfg.cap_workers(0)));
        if (!action) {
            err << app.help();
            return kConfigError;
        }
        return action();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kConfigError;
    } catch (const translate::AuthError& e) {
        err << "credentials error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace ptkit::cli
