#include "ptkit/curation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ptkit/error.hpp"
#include "ptkit/unicode.hpp"
#include "ptkit/variant_split.hpp"

namespace ptkit::curation {

namespace {

constexpr std::string_view kBundledStopwords =
#include "stopwords_pt.inc"
    ;

constexpr std::array<std::string_view, 7> kRuleNames{"min_words",    "max_words", "char_repetition", "word_repetition",
                                                     "special_char", "stopword",  "flagged_word"};

void check_ratio(double v, std::string_view name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("filter config: " + std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
    }
}

std::unordered_set<std::string> lowercase_set(const std::vector<std::string>& words) {
    std::unordered_set<std::string> out;
    for (const auto& w : words) {
        if (!w.empty()) {
            out.insert(unicode::to_lower(w));
        }
    }
    return out;
}

// Packs a character 3-gram into one key; scalars fit in 21 bits.
std::uint64_t trigram_key(char32_t a, char32_t b, char32_t c) {
    return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(b) << 21) | static_cast<std::uint64_t>(c);
}

bool suffix_blocked(std::string_view host, const std::set<std::string>& suffixes) {
    for (std::size_t dot = host.find('.'); dot != std::string_view::npos; dot = host.find('.', dot + 1)) {
        if (suffixes.contains(std::string(host.substr(dot + 1)))) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::string_view rule_name(Rule r) noexcept {
    return kRuleNames[static_cast<std::size_t>(r)];
}

std::optional<Rule> parse_rule(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kRuleNames.size(); ++i) {
        if (kRuleNames[i] == name) {
            return static_cast<Rule>(i);
        }
    }
    return std::nullopt;
}

std::vector<std::string> bundled_stopwords() {
    std::vector<std::string> words;
    std::istringstream in{std::string(kBundledStopwords)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() != '#') {
            words.push_back(line);
        }
    }
    return words;
}

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read word list: " + path.string());
    }
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        const auto trimmed = unicode::collapse_whitespace(line);
        if (!trimmed.empty() && trimmed.front() != '#') {
            words.push_back(trimmed);
        }
    }
    return lowercase_set(words);
}

FilterConfig FilterConfig::defaults() {
    FilterConfig cfg;
    cfg.stopword_list = lowercase_set(bundled_stopwords());
    return cfg;
}

void FilterConfig::validate() const {
    if (min_words > max_words) {
        throw ConfigError("filter config: min_words (" + std::to_string(min_words) + ") exceeds max_words (" +
                          std::to_string(max_words) + ")");
    }
    check_ratio(max_char_repetition_ratio, "max_char_repetition_ratio");
    check_ratio(max_word_repetition_ratio, "max_word_repetition_ratio");
    check_ratio(max_special_char_ratio, "max_special_char_ratio");
    check_ratio(min_stopword_ratio, "min_stopword_ratio");
    check_ratio(max_flagged_word_ratio, "max_flagged_word_ratio");
}

FilterConfig filter_config_from_json(const nlohmann::json& j, FilterConfig cfg, const std::filesystem::path& relative_to) {
    if (!j.is_object()) {
        throw ConfigError("filter config must be a JSON object");
    }
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !relative_to.empty() ? relative_to / path : path;
    };
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "min_words") {
                cfg.min_words = value.get<std::uint64_t>();
            } else if (key == "max_words") {
                cfg.max_words = value.get<std::uint64_t>();
            } else if (key == "max_char_repetition_ratio") {
                cfg.max_char_repetition_ratio = value.get<double>();
            } else if (key == "max_word_repetition_ratio") {
                cfg.max_word_repetition_ratio = value.get<double>();
            } else if (key == "max_special_char_ratio") {
                cfg.max_special_char_ratio = value.get<double>();
            } else if (key == "min_stopword_ratio") {
                cfg.min_stopword_ratio = value.get<double>();
            } else if (key == "stopword_min_words") {
                cfg.stopword_min_words = value.get<std::uint64_t>();
            } else if (key == "max_flagged_word_ratio") {
                cfg.max_flagged_word_ratio = value.get<double>();
            } else if (key == "stopword_list") {
                cfg.stopword_list = lowercase_set(value.get<std::vector<std::string>>());
            } else if (key == "flagged_word_list") {
                cfg.flagged_word_list = lowercase_set(value.get<std::vector<std::string>>());
            } else if (key == "stopword_file") {
                cfg.stopword_list = load_word_list(resolve(value.get<std::string>()));
            } else if (key == "flagged_word_file") {
                cfg.flagged_word_list = load_word_list(resolve(value.get<std::string>()));
            } else if (key == "enabled_rules") {
                cfg.enabled_rules = RuleSet::none();
                for (const auto& name : value.get<std::vector<std::string>>()) {
                    const auto rule = parse_rule(name);
                    if (!rule) {
                        throw ConfigError("filter config: unknown rule name '" + name + "'");
                    }
                    cfg.enabled_rules.insert(*rule);
                }
            } else {
                throw ConfigError("filter config: unknown key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("filter config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

double Measurements::value(Rule r) const noexcept {
    switch (r) {
        case Rule::min_words:
        case Rule::max_words:
            return static_cast<double>(word_count);
        case Rule::char_repetition:
            return char_repetition_ratio;
        case Rule::word_repetition:
            return word_repetition_ratio;
        case Rule::special_char:
            return special_char_ratio;
        case Rule::stopword:
            return stopword_ratio;
        case Rule::flagged_word:
            return flagged_word_ratio;
    }
    return 0.0;
}

Measurements measure(std::string_view text, const FilterConfig& cfg) {
    Measurements m;

    // Character-level pass: 3-grams and character classes over scalars.
    std::unordered_set<std::uint64_t> trigrams;
    std::uint64_t total_chars = 0;
    std::uint64_t special_chars = 0;
    std::uint64_t total_trigrams = 0;
    char32_t prev2 = 0;
    char32_t prev1 = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = 0;
        pos += unicode::decode_one(text, pos, cp);
        ++total_chars;
        if (!unicode::is_alnum(cp) && !unicode::is_space(cp)) {
            ++special_chars;
        }
        if (total_chars >= 3) {
            trigrams.insert(trigram_key(prev2, prev1, cp));
            ++total_trigrams;
        }
        prev2 = prev1;
        prev1 = cp;
    }
    if (total_trigrams > 0) {
        m.char_repetition_ratio = 1.0 - static_cast<double>(trigrams.size()) / static_cast<double>(total_trigrams);
    }
    if (total_chars > 0) {
        m.special_char_ratio = static_cast<double>(special_chars) / static_cast<double>(total_chars);
    }

    // Word-level pass.
    const auto words = unicode::split_words(text);
    m.word_count = words.size();
    if (!words.empty()) {
        std::unordered_set<std::string_view> distinct(words.begin(), words.end());
        m.word_repetition_ratio = 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(words.size());

        std::uint64_t stop = 0;
        std::uint64_t flagged = 0;
        const bool check_flagged = !cfg.flagged_word_list.empty();
        for (auto w : words) {
            const std::string lowered = unicode::to_lower(unicode::trim_non_alnum(w));
            if (cfg.stopword_list.contains(lowered)) {
                ++stop;
            }
            if (check_flagged && cfg.flagged_word_list.contains(lowered)) {
                ++flagged;
            }
        }
        m.stopword_ratio = static_cast<double>(stop) / static_cast<double>(words.size());
        m.flagged_word_ratio = static_cast<double>(flagged) / static_cast<double>(words.size());
    }
    return m;
}

std::map<std::string, double> measure_rules(std::string_view text, const FilterConfig& cfg) {
    const Measurements m = measure(text, cfg);
    std::map<std::string, double> out;
    for (Rule r : kRuleOrder) {
        out.emplace(rule_name(r), m.value(r));
    }
    return out;
}

bool violates(Rule r, const Measurements& m, const FilterConfig& cfg) noexcept {
    switch (r) {
        case Rule::min_words:
            return m.word_count < cfg.min_words;
        case Rule::max_words:
            return m.word_count > cfg.max_words;
        case Rule::char_repetition:
            return m.char_repetition_ratio > cfg.max_char_repetition_ratio;
        case Rule::word_repetition:
            return m.word_repetition_ratio > cfg.max_word_repetition_ratio;
        case Rule::special_char:
            return m.special_char_ratio > cfg.max_special_char_ratio;
        case Rule::stopword:
            return m.word_count >= cfg.stopword_min_words && m.stopword_ratio < cfg.min_stopword_ratio;
        case Rule::flagged_word:
            return m.flagged_word_ratio > cfg.max_flagged_word_ratio;
    }
    return false;
}

FilterDecision evaluate(const Measurements& m, const FilterConfig& cfg, std::span<const Rule> order) {
    FilterDecision d;
    for (Rule r : order) {
        if (!cfg.enabled_rules.contains(r)) {
            continue;
        }
        d.measured.emplace(rule_name(r), m.value(r));
        if (d.keep && violates(r, m, cfg)) {
            d.keep = false;
            d.rejected_by = r;
        }
    }
    return d;
}

FilterDecision apply_filters(const corpus::CorpusRecord& record, const FilterConfig& cfg) {
    if (cfg.enabled_rules.empty()) {
        return {};
    }
    return evaluate(measure(record.text, cfg), cfg);
}

void Blocklist::normalize() {
    auto fix = [](const std::set<std::string>& in, std::string_view kind) {
        std::set<std::string> out;
        for (const auto& entry : in) {
            if (entry.find("://") != std::string::npos || entry.find_first_of("/:?#@") != std::string::npos) {
                throw ConfigError("blocklist " + std::string(kind) + " entry must be a bare domain: '" + entry + "'");
            }
            std::string lowered = unicode::to_lower(entry);
            while (!lowered.empty() && lowered.front() == '.') {
                lowered.erase(lowered.begin());
            }
            if (!lowered.empty()) {
                out.insert(std::move(lowered));
            }
        }
        return out;
    };
    exact_domains = fix(exact_domains, "exact_domains");
    suffix_domains = fix(suffix_domains, "suffix_domains");
}

Blocklist Blocklist::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("blocklist must be a JSON object");
    }
    Blocklist bl;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "exact_domains") {
                bl.exact_domains = value.get<std::set<std::string>>();
            } else if (key == "suffix_domains") {
                bl.suffix_domains = value.get<std::set<std::string>>();
            } else {
                throw ConfigError("blocklist: unknown key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("blocklist: ") + e.what());
    }
    bl.normalize();
    return bl;
}

Blocklist Blocklist::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read blocklist: " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false, /*ignore_comments=*/true);
    if (j.is_discarded()) {
        throw ConfigError("blocklist is not valid JSON: " + path.string());
    }
    return from_json(j);
}

bool apply_blocklist(const corpus::CorpusRecord& record, const Blocklist& bl) {
    if (!record.url) {
        return true;
    }
    const auto host = variant::extract_host(*record.url);
    if (!host) {
        return true;
    }
    if (bl.exact_domains.contains(*host)) {
        return false;
    }
    return !suffix_blocked(*host, bl.suffix_domains);
}

CurationVerdict curate_record(const corpus::CorpusRecord& record, const CurationPolicy& policy) {
    CurationVerdict v;
    if (!apply_blocklist(record, policy.blocklist)) {
        v.keep = false;
        v.rejected_by = kBlocklistReason;
        v.decision.keep = false;
        return v;
    }
    if (policy.quality_exempt_sources.contains(record.source)) {
        return v;
    }
    v.decision = apply_filters(record, policy.filters);
    v.keep = v.decision.keep;
    if (v.decision.rejected_by) {
        v.rejected_by = rule_name(*v.decision.rejected_by);
    }
    return v;
}

std::vector<CurationVerdict> curate_batch_serial(std::span<const corpus::CorpusRecord> records, const CurationPolicy& policy) {
    std::vector<CurationVerdict> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        out.push_back(curate_record(rec, policy));
    }
    return out;
}

std::vector<CurationVerdict> curate_batch(std::span<const corpus::CorpusRecord> records, const CurationPolicy& policy) {
    std::vector<CurationVerdict> out(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = curate_record(records[static_cast<std::size_t>(i)], policy);
    }
    return out;
}

nlohmann::ordered_json verdict_to_json(const corpus::CorpusRecord& record, const CurationVerdict& verdict) {
    nlohmann::ordered_json j;
    j["id"] = record.id;
    j["keep"] = verdict.keep;
    j["rejected_by"] = verdict.rejected_by.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(verdict.rejected_by);
    nlohmann::ordered_json measured = nlohmann::ordered_json::object();
    for (Rule r : kRuleOrder) {
        const auto it = verdict.decision.measured.find(std::string(rule_name(r)));
        if (it != verdict.decision.measured.end()) {
            measured[it->first] = it->second;
        }
    }
    j["measured"] = std::move(measured);
    return j;
}

std::string dedup_key(std::string_view text) {
    return unicode::collapse_whitespace(text);
}

bool Deduplicator::admit(std::string_view text) {
    const Digest128 key = digest128(dedup_key(text));
    std::lock_guard lock(mu_);
    if (seen_.insert(key).second) {
        return true;
    }
    ++duplicates_;
    return false;
}

std::uint64_t Deduplicator::duplicates() const {
    std::lock_guard lock(mu_);
    return duplicates_;
}

std::uint64_t Deduplicator::unique() const {
    std::lock_guard lock(mu_);
    return seen_.size();
}

DedupResult dedup_exact(std::span<const corpus::CorpusRecord> records) {
    Deduplicator dedup;
    DedupResult result;
    for (const auto& rec : records) {
        if (dedup.admit(rec.text)) {
            result.records.push_back(rec);
        }
    }
    result.duplicates = dedup.duplicates();
    return result;
}

}  // namespace ptkit::curation
