#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "ptkit/corpus_io.hpp"
#include "ptkit/hash.hpp"

namespace ptkit::curation {

// Quality rules, in evaluation order.
enum class Rule : std::uint8_t {
    min_words,
    max_words,
    char_repetition,
    word_repetition,
    special_char,
    stopword,
    flagged_word,
};

inline constexpr std::array<Rule, 7> kRuleOrder{Rule::min_words,      Rule::max_words,    Rule::char_repetition,
                                                Rule::word_repetition, Rule::special_char, Rule::stopword,
                                                Rule::flagged_word};

std::string_view rule_name(Rule r) noexcept;
std::optional<Rule> parse_rule(std::string_view name) noexcept;

class RuleSet {
public:
    RuleSet() = default;
    static RuleSet all() noexcept { return RuleSet(0x7F); }
    static RuleSet none() noexcept { return RuleSet(0); }

    bool contains(Rule r) const noexcept { return (bits_ >> static_cast<unsigned>(r)) & 1U; }
    void insert(Rule r) noexcept { bits_ |= static_cast<std::uint8_t>(1U << static_cast<unsigned>(r)); }
    void erase(Rule r) noexcept { bits_ &= static_cast<std::uint8_t>(~(1U << static_cast<unsigned>(r))); }
    bool empty() const noexcept { return bits_ == 0; }

    friend bool operator==(RuleSet, RuleSet) = default;

private:
    explicit RuleSet(std::uint8_t bits) : bits_(bits) {}
    std::uint8_t bits_ = 0;
};

struct FilterConfig {
    std::uint64_t min_words = 5;
    std::uint64_t max_words = 100000;
    double max_char_repetition_ratio = 0.8;
    double max_word_repetition_ratio = 0.6;
    double max_special_char_ratio = 0.4;
    double min_stopword_ratio = 0.05;
    // The stopword rule only fires on texts with at least this many words.
    std::uint64_t stopword_min_words = 20;
    std::unordered_set<std::string> stopword_list;
    std::unordered_set<std::string> flagged_word_list;
    double max_flagged_word_ratio = 0.01;
    RuleSet enabled_rules = RuleSet::all();

    // Defaults with the bundled Portuguese stopword list and an empty flagged-word list.
    static FilterConfig defaults();

    // Throws ConfigError when min_words > max_words or a ratio leaves [0, 1].
    void validate() const;
};

// Overlays keys from a JSON object onto `base`. Unknown keys are rejected.
FilterConfig filter_config_from_json(const nlohmann::json& j, FilterConfig base = FilterConfig::defaults(),
                                     const std::filesystem::path& relative_to = {});

std::vector<std::string> bundled_stopwords();
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);

struct Measurements {
    std::uint64_t word_count = 0;
    double char_repetition_ratio = 0.0;
    double word_repetition_ratio = 0.0;
    double special_char_ratio = 0.0;
    double stopword_ratio = 0.0;
    double flagged_word_ratio = 0.0;

    double value(Rule r) const noexcept;
};

Measurements measure(std::string_view text, const FilterConfig& cfg);

// Rule name -> measured value for all seven rules (min_words and max_words both report the word count).
std::map<std::string, double> measure_rules(std::string_view text, const FilterConfig& cfg);

bool violates(Rule r, const Measurements& m, const FilterConfig& cfg) noexcept;

struct FilterDecision {
    bool keep = true;
    std::optional<Rule> rejected_by;
    std::map<std::string, double> measured;  // every enabled rule
};

// Evaluates enabled rules in `order`; the first violated one is reported.
FilterDecision evaluate(const Measurements& m, const FilterConfig& cfg, std::span<const Rule> order = kRuleOrder);

FilterDecision apply_filters(const corpus::CorpusRecord& record, const FilterConfig& cfg);

struct Blocklist {
    std::set<std::string> exact_domains;
    std::set<std::string> suffix_domains;

    // Lowercases entries; throws ConfigError on entries carrying a scheme, port or path.
    void normalize();
    static Blocklist from_json(const nlohmann::json& j);
    static Blocklist load(const std::filesystem::path& path);
};

// False iff the URL host equals an exact entry or ends with "." + a suffix entry.
// Records without a URL are kept.
bool apply_blocklist(const corpus::CorpusRecord& record, const Blocklist& bl);

struct CurationPolicy {
    FilterConfig filters = FilterConfig::defaults();
    Blocklist blocklist;
    // Quality rules are skipped for these sources; the blocklist still applies.
    std::set<corpus::Source> quality_exempt_sources{corpus::Source::CulturaX};
};

inline constexpr std::string_view kBlocklistReason = "blocklist";

struct CurationVerdict {
    bool keep = true;
    std::string rejected_by;  // "blocklist" or a rule name; empty when kept
    FilterDecision decision;
};

CurationVerdict curate_record(const corpus::CorpusRecord& record, const CurationPolicy& policy);

std::vector<CurationVerdict> curate_batch_serial(std::span<const corpus::CorpusRecord> records, const CurationPolicy& policy);
std::vector<CurationVerdict> curate_batch(std::span<const corpus::CorpusRecord> records, const CurationPolicy& policy);

// One JSON object per rejected record for the rejects file.
nlohmann::ordered_json verdict_to_json(const corpus::CorpusRecord& record, const CurationVerdict& verdict);

// Whitespace-collapsed, trimmed text: the dedup identity.
std::string dedup_key(std::string_view text);

// Exact-duplicate filter keyed by a 128-bit content hash of the normalized text.
// `admit` is serialized by a mutex, so concurrent producers are safe; callers
// that need first-in-input-order semantics must feed records in order.
class Deduplicator {
public:
    bool admit(std::string_view text);
    std::uint64_t duplicates() const;
    std::uint64_t unique() const;

private:
    mutable std::mutex mu_;
    std::unordered_set<Digest128, Digest128Hash> seen_;
    std::uint64_t duplicates_ = 0;
};

struct DedupResult {
    std::vector<corpus::CorpusRecord> records;
    std::uint64_t duplicates = 0;
};

DedupResult dedup_exact(std::span<const corpus::CorpusRecord> records);

}  // namespace ptkit::curation
