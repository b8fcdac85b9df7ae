#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ptkit/translate.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "ptkit/error.hpp"

namespace ptkit::translate {

DeepLClient::DeepLClient(std::string auth_key, std::string base_url) : auth_key_(std::move(auth_key)), base_url_(std::move(base_url)) {
    if (base_url_.empty()) {
        base_url_ = auth_key_.ends_with(":fx") ? "https://api-free.deepl.com" : "https://api.deepl.com";
    }
    while (base_url_.ends_with('/')) {
        base_url_.pop_back();
    }
}

DeepLClient DeepLClient::from_environment() {
    const char* key = std::getenv(kDeepLKeyEnv);
    if (key == nullptr || *key == '\0') {
        throw AuthError(std::string("no translation credentials: set ") + kDeepLKeyEnv);
    }
    const char* url = std::getenv(kDeepLUrlEnv);
    return DeepLClient(key, url ? url : "");
}

std::vector<std::string> DeepLClient::translate_batch(std::span<const std::string> texts, bench::Variant target) {
    if (texts.empty()) {
        return {};
    }
    nlohmann::json body;
    body["text"] = nlohmann::json::array();
    for (const auto& t : texts) {
        body["text"].push_back(t);
    }
    body["source_lang"] = "EN";
    body["target_lang"] = target_code(target);

    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    const httplib::Headers headers{{"Authorization", "DeepL-Auth-Key " + auth_key_}};
    const auto res = client.Post("/v2/translate", headers, body.dump(), "application/json");
    if (!res) {
        throw TransientError("translation request failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("translation service rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransientError("translation service busy (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        throw PermanentError("translation request rejected (HTTP " + std::to_string(res->status) + "): " + res->body);
    }
    const auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("translations") || !reply["translations"].is_array() ||
        reply["translations"].size() != texts.size()) {
        throw PermanentError("malformed translation response");
    }
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& t : reply["translations"]) {
        if (!t.contains("text") || !t["text"].is_string()) {
            throw PermanentError("malformed translation response entry");
        }
        out.push_back(t["text"].get<std::string>());
    }
    return out;
}

TranslationCache::TranslationCache(const std::filesystem::path& dir) {
    if (dir.empty()) {
        return;
    }
    std::filesystem::create_directories(dir);
    file_ = dir / "translations.jsonl";
    if (std::ifstream in(file_); in) {
        std::string line;
        while (std::getline(in, line)) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            // A torn final line from an interrupted run is ignored.
            if (j.is_discarded() || !j.is_object()) {
                continue;
            }
            try {
                const auto target = bench::parse_variant(j.at("target").get<std::string>());
                entries_[{target, j.at("source").get<std::string>()}] = j.at("text").get<std::string>();
            } catch (const std::exception&) {
                continue;
            }
        }
    }
    log_.open(file_, std::ios::app | std::ios::binary);
    if (!log_) {
        throw IoError("cannot open translation cache: " + file_.string());
    }
}

std::optional<std::string> TranslationCache::get(const std::string& text, bench::Variant target) const {
    std::lock_guard lock(mu_);
    const auto it = entries_.find({target, text});
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void TranslationCache::put(const std::string& text, bench::Variant target, const std::string& translation) {
    std::lock_guard lock(mu_);
    entries_[{target, text}] = translation;
    if (log_.is_open()) {
        nlohmann::ordered_json j;
        j["target"] = bench::to_string(target);
        j["source"] = text;
        j["text"] = translation;
        log_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
        log_.flush();
        if (!log_) {
            throw IoError("translation cache write failed: " + file_.string());
        }
    }
}

std::size_t TranslationCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
    const double scaled = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 1);
    const auto capped = std::min(scaled, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

namespace {

struct FailedText {
    std::string reason;
};

class BatchRunner {
public:
    BatchRunner(TranslationService& service, TranslationCache& cache, bench::Variant target, const RetryPolicy& retry)
        : service_(service), cache_(cache), target_(target), retry_(retry) {}

    // Returns an empty string on success, else the failure reason.
    std::string run(std::span<const std::string> texts) {
        for (int attempt = 1;; ++attempt) {
            try {
                ++requests;
                const auto out = service_.translate_batch(texts, target_);
                if (out.size() != texts.size()) {
                    return "service returned " + std::to_string(out.size()) + " translations for " +
                           std::to_string(texts.size()) + " texts";
                }
                for (std::size_t i = 0; i < texts.size(); ++i) {
                    cache_.put(texts[i], target_, out[i]);
                }
                return {};
            } catch (const AuthError&) {
                throw;
            } catch (const TransientError& e) {
                if (attempt >= retry_.max_attempts) {
                    return std::string("gave up after ") + std::to_string(attempt) + " attempts: " + e.what();
                }
                spdlog::debug("transient translation failure (attempt {}): {}", attempt, e.what());
                std::this_thread::sleep_for(retry_.delay_for(attempt));
            } catch (const std::exception& e) {
                return e.what();
            }
        }
    }

    std::atomic<std::uint64_t> requests{0};

private:
    TranslationService& service_;
    TranslationCache& cache_;
    bench::Variant target_;
    RetryPolicy retry_;
};

}  // namespace

TranslateResult translate_dataset(std::span<const bench::TaskExample> examples, const bench::TaskSpec& spec,
                                  bench::Variant target, TranslationService& service, TranslationCache& cache,
                                  const TranslateOptions& options) {
    TranslateResult result;

    // Unique uncached source strings, in first-seen order.
    std::vector<std::string> pending;
    std::set<std::string> queued;
    for (const auto& ex : examples) {
        for (const auto& field : spec.text_fields) {
            const auto it = ex.fields.find(field);
            if (it == ex.fields.end()) {
                continue;
            }
            if (cache.get(it->second, target)) {
                ++result.stats.cache_hits;
            } else if (queued.insert(it->second).second) {
                pending.push_back(it->second);
            }
        }
    }
    result.stats.unique_texts = pending.size();

    const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
    const std::size_t n_batches = (pending.size() + batch_size - 1) / batch_size;
    BatchRunner runner(service, cache, target, options.retry);
    std::mutex failed_mu;
    std::map<std::string, std::string> failed;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;

    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_batches || abort.load()) {
                return;
            }
            const auto begin = pending.begin() + static_cast<std::ptrdiff_t>(b * batch_size);
            const auto end = pending.begin() + static_cast<std::ptrdiff_t>(std::min(pending.size(), (b + 1) * batch_size));
            const std::span<const std::string> batch(&*begin, static_cast<std::size_t>(end - begin));
            try {
                if (runner.run(batch).empty()) {
                    continue;
                }
                // Isolate the failing strings.
                for (const auto& text : batch) {
                    if (auto why = runner.run(std::span<const std::string>(&text, 1)); !why.empty()) {
                        std::lock_guard lock(failed_mu);
                        failed.emplace(text, std::move(why));
                    }
                }
            } catch (...) {
                std::lock_guard lock(failed_mu);
                if (!fatal) {
                    fatal = std::current_exception();
                }
                abort = true;
                return;
            }
        }
    };

    const std::size_t n_workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, n_batches));
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_workers && n_batches > 0; ++i) {
            pool.emplace_back(worker);
        }
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }
    result.stats.requests = runner.requests.load();

    for (const auto& ex : examples) {
        bench::TaskExample out = ex;
        std::string reason;
        for (const auto& field : spec.text_fields) {
            auto it = out.fields.find(field);
            if (it == out.fields.end()) {
                reason = "missing field " + field;
                break;
            }
            if (auto translated = cache.get(it->second, target)) {
                it->second = std::move(*translated);
            } else {
                const auto f = failed.find(it->second);
                reason = "field " + field + ": " + (f != failed.end() ? f->second : std::string("not translated"));
                break;
            }
        }
        if (reason.empty()) {
            result.translated.push_back(std::move(out));
        } else {
            result.rejects.push_back({ex, std::move(reason)});
        }
    }
    return result;
}

}  // namespace ptkit::translate
