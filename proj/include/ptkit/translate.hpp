#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ptkit/benchprep.hpp"

namespace ptkit::translate {

// Retryable: rate limiting, 5xx, dropped connections.
class TransientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or missing credentials. Aborts the whole run.
class AuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Request-level failure that retrying will not fix.
class PermanentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Abstract MT service: one call translates a batch of strings into one target variant.
class TranslationService {
public:
    virtual ~TranslationService() = default;
    // Must return exactly texts.size() strings, in order.
    virtual std::vector<std::string> translate_batch(std::span<const std::string> texts, bench::Variant target) = 0;
};

// Environment variable holding the DeepL API key.
inline constexpr const char* kDeepLKeyEnv = "DEEPL_AUTH_KEY";
// Optional override of the API base URL (e.g. a local mock).
inline constexpr const char* kDeepLUrlEnv = "DEEPL_API_URL";

// HTTP binding for the DeepL v2 /translate endpoint, source language English.
class DeepLClient final : public TranslationService {
public:
    // Free-tier keys (suffix ":fx") default to api-free.deepl.com.
    explicit DeepLClient(std::string auth_key, std::string base_url = {});
    static DeepLClient from_environment();

    std::vector<std::string> translate_batch(std::span<const std::string> texts, bench::Variant target) override;

    static std::string_view target_code(bench::Variant v) noexcept { return v == bench::Variant::PTPT ? "PT-PT" : "PT-BR"; }
    const std::string& base_url() const noexcept { return base_url_; }

private:
    std::string auth_key_;
    std::string base_url_;
};

// Persistent (text, target) -> translation map. Backed by an append-only
// translations.jsonl in `dir`; an empty dir keeps it in memory only.
class TranslationCache {
public:
    TranslationCache() = default;
    explicit TranslationCache(const std::filesystem::path& dir);

    std::optional<std::string> get(const std::string& text, bench::Variant target) const;
    void put(const std::string& text, bench::Variant target, const std::string& translation);
    std::size_t size() const;

private:
    using Key = std::pair<bench::Variant, std::string>;
    mutable std::mutex mu_;
    std::map<Key, std::string> entries_;
    std::filesystem::path file_;
    std::ofstream log_;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{8000};

    std::chrono::milliseconds delay_for(int attempt) const;  // attempt is 1-based
};

struct TranslateOptions {
    std::size_t batch_size = 32;
    std::size_t workers = 4;
    RetryPolicy retry;
};

struct Rejected {
    bench::TaskExample example;
    std::string reason;
};

struct TranslateStats {
    std::uint64_t requests = 0;  // calls into the service, retries included
    std::uint64_t cache_hits = 0;
    std::uint64_t unique_texts = 0;
};

struct TranslateResult {
    std::vector<bench::TaskExample> translated;
    std::vector<Rejected> rejects;
    TranslateStats stats;
};

// Replaces every text field with its translation; ids, labels and meta fields
// are preserved. Failed batches are retried per string; examples with an
// untranslatable field go to `rejects`. Throws AuthError.
TranslateResult translate_dataset(std::span<const bench::TaskExample> examples, const bench::TaskSpec& spec,
                                  bench::Variant target, TranslationService& service, TranslationCache& cache,
                                  const TranslateOptions& options = {});

}  // namespace ptkit::translate
