#include "ptkit/tokpack.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "ptkit/error.hpp"
#include "ptkit/unicode.hpp"

namespace ptkit::tokpack {

void PieceTrie::insert(std::string_view piece, TokenId id) {
    std::uint32_t node = 0;
    for (unsigned char byte : piece) {
        const std::uint64_t key = (static_cast<std::uint64_t>(node) << 8) | byte;
        auto it = edges_.find(key);
        if (it == edges_.end()) {
            const auto next = static_cast<std::uint32_t>(terminal_.size());
            terminal_.push_back(-1);
            it = edges_.emplace(key, next).first;
        }
        node = it->second;
    }
    terminal_[node] = id;
}

std::uint32_t PieceTrie::child(std::uint32_t node, unsigned char byte) const {
    const auto it = edges_.find((static_cast<std::uint64_t>(node) << 8) | byte);
    return it == edges_.end() ? 0 : it->second;
}

std::optional<std::pair<TokenId, std::size_t>> PieceTrie::longest_prefix(std::string_view s) const {
    std::optional<std::pair<TokenId, std::size_t>> best;
    std::uint32_t node = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        node = child(node, static_cast<unsigned char>(s[i]));
        if (node == 0) {
            break;
        }
        if (terminal_[node] >= 0) {
            best = std::pair{terminal_[node], i + 1};
        }
    }
    return best;
}

Vocabulary Vocabulary::from_pieces(const std::vector<std::string>& pieces, SpecialPieces specials) {
    if (pieces.empty()) {
        throw ConfigError("vocabulary has no pieces besides the special tokens");
    }
    Vocabulary v;
    v.pieces_ = {specials.cls, specials.sep, specials.pad, specials.unk};
    v.pieces_.insert(v.pieces_.end(), pieces.begin(), pieces.end());
    v.specials_ = SpecialIds{0, 1, 2, 3};

    for (std::size_t i = 0; i < v.pieces_.size(); ++i) {
        const std::string& p = v.pieces_[i];
        const auto id = static_cast<TokenId>(i);
        if (p.empty() || p == kContinuationPrefix) {
            throw ConfigError("vocabulary piece " + std::to_string(i) + " is empty");
        }
        if (!unicode::is_valid_utf8(p)) {
            throw ConfigError("vocabulary piece " + std::to_string(i) + " is not valid UTF-8");
        }
        if (!v.ids_.emplace(p, id).second) {
            throw ConfigError("duplicate vocabulary piece '" + p + "'");
        }
        if (i < 4) {
            continue;  // specials never match text
        }
        if (p.starts_with(kContinuationPrefix)) {
            v.continuation_.insert(std::string_view(p).substr(kContinuationPrefix.size()), id);
        } else {
            v.initial_.insert(p, id);
        }
    }
    return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read vocabulary file: " + path.string());
    }
    static constexpr std::array<std::string_view, 4> kRoles{"cls", "sep", "pad", "unk"};
    SpecialPieces specials;
    std::array<std::string*, 4> slots{&specials.cls, &specials.sep, &specials.pad, &specials.unk};

    std::string line;
    for (std::size_t i = 0; i < kRoles.size(); ++i) {
        if (!std::getline(in, line)) {
            throw ConfigError(path.string() + ": vocabulary header needs 4 lines (cls, sep, pad, unk)");
        }
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const auto space = line.find_first_of(" \t");
        if (space == std::string::npos || line.substr(0, space) != kRoles[i]) {
            throw ConfigError(path.string() + ":" + std::to_string(i + 1) + ": expected header '" + std::string(kRoles[i]) +
                              " <piece>'");
        }
        const auto start = line.find_first_not_of(" \t", space);
        if (start == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(i + 1) + ": missing special piece");
        }
        *slots[i] = line.substr(start);
    }

    std::vector<std::string> pieces;
    std::size_t line_no = kRoles.size();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty vocabulary piece");
        }
        pieces.push_back(std::move(line));
    }
    return from_pieces(pieces, specials);
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write vocabulary file: " + path.string());
    }
    out << "cls " << pieces_[0] << "\nsep " << pieces_[1] << "\npad " << pieces_[2] << "\nunk " << pieces_[3] << '\n';
    for (std::size_t i = 4; i < pieces_.size(); ++i) {
        out << pieces_[i] << '\n';
    }
}

std::optional<TokenId> Vocabulary::id(std::string_view piece) const {
    const auto it = ids_.find(std::string(piece));
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<TokenId> tokenize_word(std::string_view word, const Vocabulary& vocab) {
    std::vector<TokenId> out;
    std::size_t pos = 0;
    bool in_unknown_run = false;
    while (pos < word.size()) {
        const PieceTrie& trie = pos == 0 ? vocab.initial_trie() : vocab.continuation_trie();
        if (const auto match = trie.longest_prefix(word.substr(pos))) {
            out.push_back(match->first);
            pos += match->second;
            in_unknown_run = false;
            continue;
        }
        if (!in_unknown_run) {
            out.push_back(vocab.specials().unk);
            in_unknown_run = true;
        }
        char32_t cp = 0;
        pos += unicode::decode_one(word, pos, cp);
    }
    return out;
}

TokenizedSequence tokenize(std::string_view text, const Vocabulary& vocab) {
    TokenizedSequence seq;
    seq.token_ids.push_back(vocab.specials().cls);
    for (auto word : unicode::split_words(text)) {
        const auto ids = tokenize_word(word, vocab);
        seq.token_ids.insert(seq.token_ids.end(), ids.begin(), ids.end());
    }
    seq.token_ids.push_back(vocab.specials().sep);
    return seq;
}

std::vector<TokenizedSequence> tokenize_batch_serial(std::span<const std::string_view> texts, const Vocabulary& vocab) {
    std::vector<TokenizedSequence> out;
    out.reserve(texts.size());
    for (auto t : texts) {
        out.push_back(tokenize(t, vocab));
    }
    return out;
}

std::vector<TokenizedSequence> tokenize_batch(std::span<const std::string_view> texts, const Vocabulary& vocab) {
    std::vector<TokenizedSequence> out(texts.size());
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = tokenize(texts[static_cast<std::size_t>(i)], vocab);
    }
    return out;
}

TokenizedSequence truncate(const TokenizedSequence& seq, std::size_t max_len, TokenId sep_id) {
    if (max_len < 2) {
        throw std::invalid_argument("truncate: max_len must be >= 2, got " + std::to_string(max_len));
    }
    if (seq.token_ids.size() <= max_len) {
        return seq;
    }
    TokenizedSequence out;
    out.token_ids.assign(seq.token_ids.begin(), seq.token_ids.begin() + static_cast<std::ptrdiff_t>(max_len - 1));
    out.token_ids.push_back(sep_id);
    out.truncated = true;
    return out;
}

std::uint64_t PackedBatch::mask_sum() const noexcept {
    std::uint64_t s = 0;
    for (auto m : attention_mask) {
        s += m;
    }
    return s;
}

PackedBatch pack_batch(std::span<const TokenizedSequence> seqs, std::uint32_t stage_max_len, TokenId pad_id) {
    if (seqs.empty()) {
        throw std::invalid_argument("pack_batch: empty batch");
    }
    std::size_t longest = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (seqs[i].size() > stage_max_len) {
            throw std::invalid_argument("pack_batch: sequence " + std::to_string(i) + " has length " +
                                        std::to_string(seqs[i].size()) + " > stage max " + std::to_string(stage_max_len));
        }
        longest = std::max(longest, seqs[i].size());
    }

    PackedBatch b;
    b.rows = seqs.size();
    b.width = longest;
    b.stage_max_len = stage_max_len;
    b.token_ids.assign(b.rows * b.width, pad_id);
    b.attention_mask.assign(b.rows * b.width, 0);
    for (std::size_t r = 0; r < b.rows; ++r) {
        const auto& ids = seqs[r].token_ids;
        std::copy(ids.begin(), ids.end(), b.token_ids.begin() + static_cast<std::ptrdiff_t>(r * b.width));
        std::fill_n(b.attention_mask.begin() + static_cast<std::ptrdiff_t>(r * b.width), ids.size(), std::uint8_t{1});
    }
    return b;
}

std::uint64_t plan_device_split(std::uint64_t global_batch, std::uint64_t devices) {
    if (devices == 0) {
        throw ConfigError("device count must be >= 1 (global batch " + std::to_string(global_batch) + ")");
    }
    if (global_batch % devices != 0) {
        throw ConfigError("global batch " + std::to_string(global_batch) + " is not divisible by " +
                          std::to_string(devices) + " devices");
    }
    return global_batch / devices;
}

TruncationSchedule TruncationSchedule::parse(std::string_view spec) {
    TruncationSchedule sched;
    auto parse_uint = [&](std::string_view s, auto& out) {
        const auto* end = s.data() + s.size();
        const auto res = std::from_chars(s.data(), end, out);
        if (s.empty() || res.ec != std::errc{} || res.ptr != end) {
            throw ConfigError("bad schedule '" + std::string(spec) + "': expected <max_len>:<steps>[,...]");
        }
    };
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string_view item = spec.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ConfigError("bad schedule '" + std::string(spec) + "': expected <max_len>:<steps>[,...]");
        }
        Stage st;
        parse_uint(item.substr(0, colon), st.max_len);
        parse_uint(item.substr(colon + 1), st.steps);
        sched.stages.push_back(st);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    sched.validate();
    return sched;
}

void TruncationSchedule::validate() const {
    if (stages.empty()) {
        throw ConfigError("truncation schedule has no stages");
    }
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].steps == 0) {
            throw ConfigError("truncation stage " + std::to_string(i) + " has zero steps");
        }
        if (stages[i].max_len < 2) {
            throw ConfigError("truncation stage " + std::to_string(i) + " has max_len < 2");
        }
        if (i > 0 && stages[i].max_len <= stages[i - 1].max_len) {
            throw ConfigError("truncation stage max_len must strictly increase");
        }
    }
}

std::uint64_t TruncationSchedule::total_steps() const noexcept {
    std::uint64_t total = 0;
    for (const auto& s : stages) {
        total += s.steps;
    }
    return total;
}

std::string TruncationSchedule::to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        out << (i ? "," : "") << stages[i].max_len << ':' << stages[i].steps;
    }
    return out.str();
}

std::uint32_t schedule_stages(const TruncationSchedule& schedule, std::uint64_t step) {
    std::uint64_t boundary = 0;
    for (const auto& st : schedule.stages) {
        boundary += st.steps;
        if (step < boundary) {
            return st.max_len;
        }
    }
    throw std::invalid_argument("step " + std::to_string(step) + " is outside the schedule (total " +
                                std::to_string(boundary) + " steps)");
}

}  // namespace ptkit::tokpack
