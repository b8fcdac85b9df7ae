#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ptkit::tokpack {

using TokenId = std::int32_t;

inline constexpr std::string_view kContinuationPrefix = "##";

struct SpecialIds {
    TokenId cls = 0;
    TokenId sep = 1;
    TokenId pad = 2;
    TokenId unk = 3;
};

struct SpecialPieces {
    std::string cls = "[CLS]";
    std::string sep = "[SEP]";
    std::string pad = "[PAD]";
    std::string unk = "[UNK]";
};

// Byte trie used for greedy longest-prefix lookup.
class PieceTrie {
public:
    void insert(std::string_view piece, TokenId id);
    // Longest piece that is a prefix of `s`: (id, byte length).
    std::optional<std::pair<TokenId, std::size_t>> longest_prefix(std::string_view s) const;

private:
    std::uint32_t child(std::uint32_t node, unsigned char byte) const;

    std::unordered_map<std::uint64_t, std::uint32_t> edges_;
    std::vector<TokenId> terminal_{-1};  // node 0 is the root
};

// Subword vocabulary. Ids are a bijection onto 0..size()-1; the four special
// pieces occupy ids 0..3 in the order cls, sep, pad, unk.
class Vocabulary {
public:
    // `pieces` excludes the specials. Throws ConfigError when empty or on duplicates.
    static Vocabulary from_pieces(const std::vector<std::string>& pieces, SpecialPieces specials = {});

    // File format: four header lines "<role> <piece>" for roles cls, sep, pad, unk
    // (in that order), then one piece per line. "##" marks continuation pieces.
    static Vocabulary load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::size_t size() const noexcept { return pieces_.size(); }
    const std::vector<std::string>& pieces() const noexcept { return pieces_; }
    const std::string& piece(TokenId id) const { return pieces_.at(static_cast<std::size_t>(id)); }
    std::optional<TokenId> id(std::string_view piece) const;
    const SpecialIds& specials() const noexcept { return specials_; }

    const PieceTrie& initial_trie() const noexcept { return initial_; }
    const PieceTrie& continuation_trie() const noexcept { return continuation_; }

private:
    std::vector<std::string> pieces_;
    std::unordered_map<std::string, TokenId> ids_;
    SpecialIds specials_;
    PieceTrie initial_;
    PieceTrie continuation_;
};

struct TokenizedSequence {
    std::vector<TokenId> token_ids;
    bool truncated = false;

    std::size_t size() const noexcept { return token_ids.size(); }
    friend bool operator==(const TokenizedSequence&, const TokenizedSequence&) = default;
};

// Pieces of one whitespace-delimited word, greedy longest match. Runs of
// characters that match no piece collapse into a single unk.
std::vector<TokenId> tokenize_word(std::string_view word, const Vocabulary& vocab);

// [cls] + pieces of every word + [sep].
TokenizedSequence tokenize(std::string_view text, const Vocabulary& vocab);

std::vector<TokenizedSequence> tokenize_batch_serial(std::span<const std::string_view> texts, const Vocabulary& vocab);
std::vector<TokenizedSequence> tokenize_batch(std::span<const std::string_view> texts, const Vocabulary& vocab);

// Keeps the first max_len-1 ids and re-appends sep when longer than max_len.
// Throws std::invalid_argument when max_len < 2.
TokenizedSequence truncate(const TokenizedSequence& seq, std::size_t max_len, TokenId sep_id);

struct PackedBatch {
    std::size_t rows = 0;
    std::size_t width = 0;
    std::uint32_t stage_max_len = 0;
    std::vector<TokenId> token_ids;       // rows * width, row-major
    std::vector<std::uint8_t> attention_mask;  // rows * width

    TokenId id(std::size_t r, std::size_t c) const { return token_ids[r * width + c]; }
    std::uint8_t mask(std::size_t r, std::size_t c) const { return attention_mask[r * width + c]; }
    std::uint64_t mask_sum() const noexcept;
};

// Dynamic padding: width is the longest sequence in the batch (bounded by
// stage_max_len). Throws std::invalid_argument on an empty batch or a sequence
// longer than stage_max_len.
PackedBatch pack_batch(std::span<const TokenizedSequence> seqs, std::uint32_t stage_max_len, TokenId pad_id);

// global_batch / devices; throws ConfigError naming both numbers when not exact.
std::uint64_t plan_device_split(std::uint64_t global_batch, std::uint64_t devices);

struct Stage {
    std::uint32_t max_len = 0;
    std::uint64_t steps = 0;
    friend bool operator==(const Stage&, const Stage&) = default;
};

struct TruncationSchedule {
    std::vector<Stage> stages;

    // "128:250000,256:80000,512:60000"
    static TruncationSchedule parse(std::string_view spec);
    // Throws ConfigError unless max_len strictly increases and every steps > 0.
    void validate() const;
    std::uint64_t total_steps() const noexcept;
    std::string to_string() const;
};

// Max length of the stage containing `step` under cumulative boundaries.
// Throws std::invalid_argument when step >= total_steps().
std::uint32_t schedule_stages(const TruncationSchedule& schedule, std::uint64_t step);

}  // namespace ptkit::tokpack
