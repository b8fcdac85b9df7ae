#include "ptkit/pack.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <memory>

#include "ptkit/corpus_io.hpp"
#include "ptkit/error.hpp"
#include "ptkit/shard.hpp"

namespace ptkit::tokpack {

namespace {

std::optional<TokenizedSequence> parse_pretokenized(const std::string& line, const Vocabulary& vocab) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return std::nullopt;
    }
    const auto it = j.find("token_ids");
    if (it == j.end() || !it->is_array() || it->size() < 2) {
        return std::nullopt;
    }
    TokenizedSequence seq;
    seq.token_ids.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number_integer()) {
            return std::nullopt;
        }
        const auto id = v.get<std::int64_t>();
        if (id < 0 || static_cast<std::uint64_t>(id) >= vocab.size()) {
            return std::nullopt;
        }
        seq.token_ids.push_back(static_cast<TokenId>(id));
    }
    if (seq.token_ids.front() != vocab.specials().cls || seq.token_ids.back() != vocab.specials().sep) {
        return std::nullopt;
    }
    return seq;
}

struct StageState {
    std::unique_ptr<ShardWriter> writer;
    std::vector<TokenizedSequence> pending;
    StageSummary summary;
};

void flush_stage(StageState& st, TokenId pad_id) {
    if (st.pending.empty()) {
        return;
    }
    const PackedBatch batch = pack_batch(st.pending, st.summary.stage.max_len, pad_id);
    st.writer->append(batch);
    ++st.summary.batches;
    st.summary.rows += batch.rows;
    const std::uint64_t real = batch.mask_sum();
    st.summary.real_tokens += real;
    st.summary.padded_cells += batch.rows * batch.width - real;
    st.pending.clear();
}

}  // namespace

std::string shard_file_name(std::size_t stage_index, std::uint32_t max_len) {
    return "stage" + std::to_string(stage_index) + "-len" + std::to_string(max_len) + ".shard";
}

nlohmann::ordered_json PackSummary::to_json(const PackOptions& options) const {
    nlohmann::ordered_json j;
    j["global_batch"] = options.global_batch;
    j["devices"] = options.devices;
    j["per_device"] = per_device;
    j["schedule"] = options.schedule.to_string();
    j["records"] = records;
    j["malformed"] = malformed;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        nlohmann::ordered_json sj;
        sj["max_len"] = s.stage.max_len;
        sj["steps"] = s.stage.steps;
        sj["shard"] = s.shard.filename().string();
        sj["batches"] = s.batches;
        sj["rows"] = s.rows;
        sj["real_tokens"] = s.real_tokens;
        sj["padded_cells"] = s.padded_cells;
        sj["truncated_rows"] = s.truncated_rows;
        j["stages"].push_back(std::move(sj));
    }
    return j;
}

PackSummary pack_corpus(const std::filesystem::path& input, const Vocabulary& vocab, const PackOptions& options,
                        const std::filesystem::path& out_dir) {
    options.schedule.validate();
    PackSummary summary;
    summary.per_device = plan_device_split(options.global_batch, options.devices);
    if (options.global_batch == 0) {
        throw ConfigError("global batch must be >= 1");
    }

    std::filesystem::create_directories(out_dir);
    const TokenId pad = vocab.specials().pad;
    const TokenId sep = vocab.specials().sep;

    std::vector<StageState> stages(options.schedule.stages.size());
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const Stage& st = options.schedule.stages[i];
        stages[i].summary.stage = st;
        stages[i].summary.shard = out_dir / shard_file_name(i, st.max_len);
        stages[i].writer = std::make_unique<ShardWriter>(stages[i].summary.shard, st.max_len, pad);
        stages[i].pending.reserve(static_cast<std::size_t>(options.global_batch));
    }

    auto consume = [&](std::vector<TokenizedSequence>& seqs) {
        for (auto& seq : seqs) {
            for (auto& st : stages) {
                TokenizedSequence t = truncate(seq, st.summary.stage.max_len, sep);
                st.summary.truncated_rows += t.truncated ? 1 : 0;
                st.pending.push_back(std::move(t));
                if (st.pending.size() == options.global_batch) {
                    flush_stage(st, pad);
                }
            }
        }
        summary.records += seqs.size();
    };

    if (options.pretokenized) {
        std::ifstream in(input, std::ios::binary);
        if (!in) {
            throw IoError("cannot open input file: " + input.string());
        }
        std::vector<TokenizedSequence> chunk;
        std::string line;
        while (std::getline(in, line)) {
            if (auto seq = parse_pretokenized(line, vocab)) {
                chunk.push_back(std::move(*seq));
            } else {
                ++summary.malformed;
            }
            if (chunk.size() == options.chunk_records) {
                consume(chunk);
                chunk.clear();
            }
        }
        consume(chunk);
    } else {
        corpus::RecordReader reader(input);
        std::vector<corpus::CorpusRecord> records;
        records.reserve(options.chunk_records);
        auto run_chunk = [&] {
            std::vector<std::string_view> texts;
            texts.reserve(records.size());
            for (const auto& r : records) {
                texts.push_back(r.text);
            }
            auto seqs = tokenize_batch(texts, vocab);
            consume(seqs);
            records.clear();
        };
        while (auto rec = reader.next()) {
            records.push_back(std::move(*rec));
            if (records.size() == options.chunk_records) {
                run_chunk();
            }
        }
        run_chunk();
        summary.malformed = reader.report().records_malformed;
    }

    for (auto& st : stages) {
        flush_stage(st, pad);
        st.writer->close();
        summary.stages.push_back(st.summary);
    }

    std::ofstream manifest(out_dir / "manifest.json");
    if (!manifest) {
        throw IoError("cannot write manifest in " + out_dir.string());
    }
    manifest << summary.to_json(options).dump(2) << '\n';
    spdlog::info("packed {} records into {} stage shard(s) in {}", summary.records, stages.size(), out_dir.string());
    return summary;
}

}  // namespace ptkit::tokpack
