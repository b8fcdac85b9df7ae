#include "ptkit/corpus_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cctype>

#include "json.hpp"
#include "ptkit/error.hpp"
#include "ptkit/hash.hpp"
#include "ptkit/unicode.hpp"

namespace ptkit::corpus {

namespace {

constexpr std::array<std::pair<Source, std::string_view>, 6> kSourceNames{{
    {Source::OSCAR, "OSCAR"},
    {Source::CulturaX, "CulturaX"},
    {Source::DCEP, "DCEP"},
    {Source::Europarl, "Europarl"},
    {Source::ParlamentoPT, "ParlamentoPT"},
    {Source::Other, "Other"},
}};

bool iequals(std::string_view a, std::string_view b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
        return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
    });
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

std::string synthesize_id(std::string_view text, std::uint64_t line_no) {
    return sha256_hex(text, 6) + "-L" + std::to_string(line_no);
}

}  // namespace

std::string_view to_string(Source s) noexcept {
    for (const auto& [value, name] : kSourceNames) {
        if (value == s) {
            return name;
        }
    }
    return "Other";
}

std::optional<Source> try_parse_source(std::string_view name) noexcept {
    for (const auto& [value, label] : kSourceNames) {
        if (iequals(name, label)) {
            return value;
        }
    }
    return std::nullopt;
}

Source parse_source(std::string_view name) noexcept {
    return try_parse_source(name).value_or(Source::Other);
}

std::optional<CorpusRecord> parse_record_line(std::string_view line, std::uint64_t line_no, Source default_source) {
    if (is_blank(line)) {
        return std::nullopt;
    }
    const std::string clean = unicode::sanitize_utf8(line);
    const nlohmann::json doc = nlohmann::json::parse(clean, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        return std::nullopt;
    }
    const auto text_it = doc.find("text");
    if (text_it == doc.end() || !text_it->is_string()) {
        return std::nullopt;
    }

    CorpusRecord rec;
    rec.text = text_it->get<std::string>();
    rec.source = default_source;

    if (const auto it = doc.find("url"); it != doc.end() && it->is_string() && !it->get_ref<const std::string&>().empty()) {
        rec.url = it->get<std::string>();
    }
    if (const auto it = doc.find("source"); it != doc.end() && it->is_string()) {
        rec.source = parse_source(it->get_ref<const std::string&>());
    }
    if (const auto it = doc.find("id"); it != doc.end()) {
        if (it->is_string()) {
            rec.id = it->get<std::string>();
        } else if (it->is_number_integer() || it->is_number_unsigned()) {
            rec.id = it->dump();
        }
    }
    if (rec.id.empty()) {
        rec.id = synthesize_id(rec.text, line_no);
    }
    return rec;
}

std::string encode_record_line(const CorpusRecord& record) {
    nlohmann::ordered_json doc;
    doc["id"] = record.id;
    if (record.url) {
        doc["url"] = *record.url;
    } else {
        doc["url"] = nullptr;
    }
    doc["source"] = to_string(record.source);
    doc["text"] = record.text;
    return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

RecordReader::RecordReader(const std::filesystem::path& path, ReaderOptions options)
    : path_(path), options_(options), in_(path, std::ios::binary), file_name_(path.filename().string()) {
    if (!in_) {
        throw IoError("cannot open input file: " + path.string());
    }
}

bool RecordReader::read_line(std::string& line) {
    if (!std::getline(in_, line)) {
        return false;
    }
    report_.bytes_read += line.size() + (in_.eof() ? 0 : 1);
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    ++line_no_;
    return true;
}

std::optional<CorpusRecord> RecordReader::next() {
    return options_.format == InputFormat::line_delimited ? next_line_record() : next_block_record();
}

std::optional<CorpusRecord> RecordReader::next_line_record() {
    std::string line;
    while (read_line(line)) {
        if (auto rec = parse_record_line(line, line_no_, options_.default_source)) {
            ++report_.records_read;
            return rec;
        }
        ++report_.records_malformed;
        spdlog::debug("{}:{}: malformed record skipped", path_.string(), line_no_);
    }
    return std::nullopt;
}

std::optional<CorpusRecord> RecordReader::next_block_record() {
    std::string line;
    std::string block;
    bool have_block = false;
    while (read_line(line)) {
        if (is_blank(line)) {
            if (have_block) {
                break;
            }
            continue;
        }
        if (have_block) {
            block.push_back('\n');
        }
        block += line;
        have_block = true;
    }
    if (!have_block) {
        return std::nullopt;
    }
    CorpusRecord rec;
    rec.id = file_name_ + "#" + std::to_string(block_index_++);
    rec.text = unicode::sanitize_utf8(block);
    rec.source = options_.default_source;
    ++report_.records_read;
    return rec;
}

std::vector<CorpusRecord> read_records(const std::filesystem::path& path, ReaderOptions options, IngestReport* report) {
    RecordReader reader(path, options);
    std::vector<CorpusRecord> out;
    while (auto rec = reader.next()) {
        out.push_back(std::move(*rec));
    }
    if (report) {
        *report = reader.report();
    }
    return out;
}

RecordWriter::RecordWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw IoError("cannot open output file: " + path.string());
    }
}

RecordWriter::~RecordWriter() {
    if (out_.is_open()) {
        out_.close();
    }
}

void RecordWriter::write(const CorpusRecord& record) {
    out_ << encode_record_line(record) << '\n';
    if (!out_) {
        throw IoError("write failed: " + path_.string());
    }
    ++count_;
}

void RecordWriter::close() {
    out_.flush();
    if (!out_) {
        throw IoError("flush failed: " + path_.string());
    }
    out_.close();
}

std::uint64_t write_records(std::span<const CorpusRecord> records, const std::filesystem::path& path) {
    RecordWriter writer(path);
    for (const auto& rec : records) {
        writer.write(rec);
    }
    writer.close();
    return writer.count();
}

}  // namespace ptkit::corpus
