#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptkit::corpus {

enum class Source { OSCAR, CulturaX, DCEP, Europarl, ParlamentoPT, Other };

std::string_view to_string(Source s) noexcept;
// Case-insensitive; unrecognized names map to Other.
Source parse_source(std::string_view name) noexcept;
std::optional<Source> try_parse_source(std::string_view name) noexcept;

struct CorpusRecord {
    std::string id;
    std::string text;
    std::optional<std::string> url;  // absent for parliamentary corpora
    Source source = Source::Other;

    friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

struct IngestReport {
    std::uint64_t records_read = 0;
    std::uint64_t records_malformed = 0;
    std::uint64_t bytes_read = 0;

    std::uint64_t units_consumed() const noexcept { return records_read + records_malformed; }
};

enum class InputFormat { line_delimited, plain_text_blocks };

struct ReaderOptions {
    InputFormat format = InputFormat::line_delimited;
    // Used when a line carries no `source` key, and for every plain-text block.
    Source default_source = Source::Other;
};

// Parses one line-delimited record. `line_no` is 1-based and feeds id synthesis.
// Returns nullopt for malformed lines (not an object, invalid JSON, missing or
// non-string `text`).
std::optional<CorpusRecord> parse_record_line(std::string_view line, std::uint64_t line_no,
                                              Source default_source = Source::Other);

// Serializes with keys in the fixed order id, url, source, text; no trailing newline.
std::string encode_record_line(const CorpusRecord& record);

// Single-consumer streaming reader. Memory use is bounded by the longest line
// (or block), never by file size.
class RecordReader {
public:
    explicit RecordReader(const std::filesystem::path& path, ReaderOptions options = {});

    std::optional<CorpusRecord> next();
    const IngestReport& report() const noexcept { return report_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::optional<CorpusRecord> next_line_record();
    std::optional<CorpusRecord> next_block_record();
    bool read_line(std::string& line);

    std::filesystem::path path_;
    ReaderOptions options_;
    std::ifstream in_;
    std::string file_name_;
    std::uint64_t line_no_ = 0;
    std::uint64_t block_index_ = 0;
    IngestReport report_;
};

std::vector<CorpusRecord> read_records(const std::filesystem::path& path, ReaderOptions options = {},
                                       IngestReport* report = nullptr);

class RecordWriter {
public:
    explicit RecordWriter(const std::filesystem::path& path);
    ~RecordWriter();

    RecordWriter(const RecordWriter&) = delete;
    RecordWriter& operator=(const RecordWriter&) = delete;

    void write(const CorpusRecord& record);
    void close();
    std::uint64_t count() const noexcept { return count_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::uint64_t count_ = 0;
};

std::uint64_t write_records(std::span<const CorpusRecord> records, const std::filesystem::path& path);

}  // namespace ptkit::corpus
