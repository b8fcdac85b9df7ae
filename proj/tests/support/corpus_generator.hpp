#pragma once

// Synthetic crawl generator for end-to-end runs. Every record's fate through
// ingest -> split-variant -> curate -> dedup -> stats -> pack is decided at
// generation time and tallied in the ledger.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"

namespace ptkit::testing {

struct CorpusThresholds {
    std::uint64_t min_words = 5;
    std::uint64_t max_words = 100000;
    double max_char_repetition = 0.8;
    double max_word_repetition = 0.6;
    double max_special = 0.4;
    double min_stopword = 0.05;
    std::uint64_t stopword_min_words = 20;
};

struct CorpusLedger {
    std::uint64_t raw_lines = 0;
    std::uint64_t malformed = 0;
    std::uint64_t records = 0;
    std::uint64_t ptpt = 0;
    std::uint64_t ptbr = 0;
    std::uint64_t discard = 0;
    std::uint64_t curate_kept = 0;
    std::uint64_t curate_rejected_quality = 0;
    std::uint64_t curate_rejected_blocklist = 0;
    std::uint64_t unique = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t words = 0;
    std::vector<std::uint64_t> final_word_counts;  // in output order

    // Tokens retained at a stage when every word is exactly one vocabulary piece.
    std::uint64_t retained_tokens(std::uint64_t max_len) const {
        std::uint64_t t = 0;
        for (auto w : final_word_counts) t += std::min<std::uint64_t>(w + 2, max_len);
        return t;
    }
    std::uint64_t truncated_rows(std::uint64_t max_len) const {
        std::uint64_t t = 0;
        for (auto w : final_word_counts) t += (w + 2 > max_len) ? 1 : 0;
        return t;
    }
};

struct SyntheticCorpus {
    std::string raw;                  // line-delimited input, with malformed lines
    std::vector<std::string> words;   // content words (each one vocabulary piece)
    std::vector<std::string> stopwords;
    std::string blocked_suffix;
    CorpusLedger ledger;
};

inline std::vector<std::string> synthetic_words(std::size_t n, std::mt19937_64& rng) {
    static const std::vector<std::string> onsets{"b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "lh", "nh", "br", "tr", "pr", "gr"};
    static const std::vector<std::string> nuclei{"a", "e", "i", "o", "u", "ei", "ou", "ai", "\xC3\xA3o", "\xC3\xA9"};
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < n) {
        const int syl = std::uniform_int_distribution<int>(2, 4)(rng);
        std::string w;
        for (int k = 0; k < syl; ++k) {
            w += onsets[std::uniform_int_distribution<std::size_t>(0, onsets.size() - 1)(rng)];
            w += nuclei[std::uniform_int_distribution<std::size_t>(0, nuclei.size() - 1)(rng)];
        }
        if (seen.insert(w).second) out.push_back(w);
    }
    return out;
}

// Glyph text for a string built from glyph-alphabet characters and ASCII spaces.
inline oracle::GlyphText to_glyph_text(const std::string& s) {
    const auto& g = oracle::glyphs();
    oracle::GlyphText t;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t best = g.size();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (s.compare(pos, g[i].utf8.size(), g[i].utf8) == 0 && (best == g.size() || g[i].utf8.size() > g[best].utf8.size())) {
                best = i;
            }
        }
        if (best == g.size()) throw std::runtime_error("character outside the glyph alphabet");
        t.idx.push_back(best);
        pos += g[best].utf8.size();
    }
    return t;
}

inline bool passes_quality(const std::string& text, const std::set<std::string>& stopwords, const CorpusThresholds& th) {
    const auto m = oracle::brute_measure(to_glyph_text(text), stopwords, {});
    if (m.word_count < th.min_words || m.word_count > th.max_words) return false;
    if (m.char_repetition > th.max_char_repetition) return false;
    if (m.word_repetition > th.max_word_repetition) return false;
    if (m.special_ratio > th.max_special) return false;
    if (m.word_count >= th.stopword_min_words && m.stopword_ratio < th.min_stopword) return false;
    return true;
}

inline SyntheticCorpus generate_corpus(std::uint64_t seed, std::size_t n_records, const CorpusThresholds& th = {}) {
    std::mt19937_64 rng(seed);
    SyntheticCorpus c;
    c.words = synthetic_words(400, rng);
    c.stopwords = {"de", "que", "o", "a", "e", "do", "da", "em", "um", "para"};
    c.blocked_suffix = "bloqueado.pt";
    const std::set<std::string> stopset(c.stopwords.begin(), c.stopwords.end());
    auto& L = c.ledger;

    std::set<std::string> used_texts;  // whitespace-normalized
    std::vector<std::string> kept_texts;  // clean PTPT texts eligible for duplication
    std::uint64_t next_id = 0;
    std::ostringstream raw;

    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    auto sentence = [&](std::size_t n_words, bool with_stopwords) {
        for (;;) {
            std::vector<std::string> ws;
            std::set<std::size_t> chosen;
            while (ws.size() < n_words) {
                const auto k = pick(c.words.size());
                if (chosen.insert(k).second) ws.push_back(c.words[k]);
            }
            if (with_stopwords) {
                std::vector<std::size_t> sw(c.stopwords.size());
                std::iota(sw.begin(), sw.end(), 0);
                std::shuffle(sw.begin(), sw.end(), rng);
                const std::size_t n_sw = std::min<std::size_t>(3, n_words / 4 + 1);
                for (std::size_t k = 0; k < n_sw; ++k) ws[pick(ws.size())] = c.stopwords[sw[k]];
                // Replacements may collide with each other; keep words distinct.
                std::set<std::string> d(ws.begin(), ws.end());
                if (d.size() != ws.size()) continue;
            }
            std::string s;
            for (std::size_t k = 0; k < ws.size(); ++k) s += (k ? " " : "") + ws[k];
            if (used_texts.insert(s).second) return s;
        }
    };
    auto emit = [&](const std::string& url, const std::string& source, const std::string& text) {
        nlohmann::ordered_json j;
        j["id"] = "r" + std::to_string(next_id++);
        if (!url.empty()) j["url"] = url;
        j["source"] = source;
        j["text"] = text;
        raw << j.dump() << '\n';
        ++L.raw_lines;
        ++L.records;
    };
    auto host = [&](const std::string& tld) {
        static const std::vector<std::string> stems{"jornal", "noticias", "blog", "forum", "loja", "portal", "revista", "clube"};
        return stems[pick(stems.size())] + std::to_string(pick(500)) + "." + tld;
    };
    auto url_for = [&](const std::string& h) {
        static const std::vector<std::string> schemes{"https://", "http://", "", "HTTPS://"};
        std::string u = schemes[pick(schemes.size())] + h;
        if (pick(3) == 0) u += ":" + std::to_string(1000 + pick(9000));
        u += "/artigo/" + std::to_string(pick(100000));
        if (pick(4) == 0) u += "?p=" + std::to_string(pick(100));
        return u;
    };
    auto clean_ptpt_text = [&] {
        for (;;) {
            const auto s = sentence(8 + pick(33), true);
            if (passes_quality(s, stopset, th)) return s;
            used_texts.erase(s);
        }
    };
    auto keep_final = [&](const std::string& text) {
        ++L.ptpt;
        ++L.curate_kept;
        ++L.unique;
        const auto wc = static_cast<std::uint64_t>(std::count(text.begin(), text.end(), ' ') + 1);
        L.words += wc;
        L.final_word_counts.push_back(wc);
        kept_texts.push_back(text);
    };

    for (std::size_t r = 0; r < n_records; ++r) {
        const auto roll = pick(100);
        if (roll < 40) {
            // Clean European Portuguese web text.
            const auto text = clean_ptpt_text();
            std::string h = host("pt");
            if (pick(5) == 0) {
                for (auto& ch : h) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            }
            emit(url_for(h), pick(2) ? "OSCAR" : "CulturaX", text);
            keep_final(text);
        } else if (roll < 48) {
            // Parliamentary text without a URL.
            const auto text = clean_ptpt_text();
            static const std::vector<std::string> parl{"DCEP", "Europarl", "ParlamentoPT"};
            emit("", parl[pick(parl.size())], text);
            keep_final(text);
        } else if (roll < 68) {
            emit(url_for(host(pick(4) ? "br" : "com.br")), "OSCAR", sentence(6 + pick(20), true));
            ++L.ptbr;
        } else if (roll < 78) {
            static const std::vector<std::string> others{"com", "org", "es", "net", "pt.wikipedia.org", "br.example.com"};
            const auto tld = others[pick(others.size())];
            const std::string url = tld.find('.') != std::string::npos ? "https://" + tld + "/wiki/x" : url_for(host(tld));
            const auto mode = pick(4);
            if (mode == 0) {
                emit("", "OSCAR", sentence(6 + pick(10), true));  // web text that lost its URL
            } else if (mode == 1) {
                emit("isto nao e um url", "OSCAR", sentence(6 + pick(10), true));
            } else {
                emit(url, "CulturaX", sentence(6 + pick(10), true));
            }
            ++L.discard;
        } else if (roll < 84) {
            // Low quality from a quality-checked source: too short or degenerate.
            std::string text;
            if (pick(2) == 0) {
                text = sentence(1 + pick(3), false);
            } else {
                const auto& w = c.words[pick(c.words.size())];
                const auto reps = 10 + pick(20);
                for (std::size_t k = 0; k < reps; ++k) text += (k ? " " : "") + w;
                if (!used_texts.insert(text).second) continue;
            }
            if (passes_quality(text, stopset, th)) continue;
            emit(url_for(host("pt")), pick(2) ? "OSCAR" : "Other", text);
            ++L.ptpt;
            ++L.curate_rejected_quality;
        } else if (roll < 87) {
            // CulturaX skips the quality rules: a short text survives.
            const auto text = sentence(2 + pick(2), false);
            emit(url_for(host("pt")), "CulturaX", text);
            keep_final(text);
            kept_texts.pop_back();  // as OSCAR a copy would fail the quality rules
        } else if (roll < 90) {
            // Blocklisted domain, otherwise clean.
            const std::string h = (pick(2) ? "www." : "arquivo.") + c.blocked_suffix;
            emit(url_for(h), pick(2) ? "OSCAR" : "CulturaX", clean_ptpt_text());
            ++L.ptpt;
            ++L.curate_rejected_blocklist;
        } else if (roll < 97) {
            if (kept_texts.empty()) continue;
            // Duplicate of an earlier kept text, possibly with different spacing.
            std::string text = kept_texts[pick(kept_texts.size())];
            if (pick(2) == 0) {
                std::string spaced;
                for (char ch : text) spaced += ch == ' ' ? (pick(2) ? "  " : " \t") : std::string(1, ch);
                spaced = " " + spaced + "\n";
                if (passes_quality(spaced, stopset, th)) text = spaced;
            }
            emit(url_for(host("pt")), "OSCAR", text);
            ++L.ptpt;
            ++L.curate_kept;
            ++L.duplicates;
        } else {
            raw << "{\"id\": \"broken" << r << "\", \"text\": \"unterminated\n";
            ++L.raw_lines;
            ++L.malformed;
        }
    }
    c.raw = raw.str();
    return c;
}

}  // namespace ptkit::testing
