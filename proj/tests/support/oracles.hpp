#pragma once

// Deliberately naive reference implementations. They share no code with the
// library so that agreement means something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace ptkit::oracle {

// ---------------------------------------------------------------- text

enum class CharClass { letter, digit, space, special };

struct Glyph {
    std::string utf8;
    CharClass cls;
};

inline const std::vector<Glyph>& glyphs() {
    static const std::vector<Glyph> g = [] {
        std::vector<Glyph> v;
        for (char c = 'a'; c <= 'z'; ++c) v.push_back({std::string(1, c), CharClass::letter});
        for (char c = 'A'; c <= 'Z'; ++c) v.push_back({std::string(1, c), CharClass::letter});
        // Lowercase Portuguese accented letters.
        for (const char* s : {"\xC3\xA3", "\xC3\xA7", "\xC3\xA9", "\xC3\xB4", "\xC3\xA1", "\xC3\xAA", "\xC3\xAD",
                              "\xC3\xB3", "\xC3\xBA", "\xC3\xA2", "\xC3\xB5", "\xC3\xA0"}) {
            v.push_back({s, CharClass::letter});
        }
        for (char c = '0'; c <= '9'; ++c) v.push_back({std::string(1, c), CharClass::digit});
        for (const char* s : {" ", "\t", "\n", "\xC2\xA0", "\xE3\x80\x80", "\xE2\x80\x83"}) {
            v.push_back({s, CharClass::space});  // space, tab, newline, nbsp, ideographic space, em space
        }
        for (const char* s : {".", ",", ";", ":", "!", "?", "-", "(", ")", "\"", "'", "\xE2\x82\xAC", "\xF0\x9F\x98\x80",
                              "\xE2\x80\x94", "\xC2\xAB", "\xC2\xBB"}) {
            v.push_back({s, CharClass::special});  // euro, grinning face, long dash, guillemets
        }
        return v;
    }();
    return g;
}

// A text as glyph indices; the UTF-8 form is their concatenation.
struct GlyphText {
    std::vector<std::size_t> idx;

    std::string utf8() const {
        std::string s;
        for (auto i : idx) s += glyphs()[i].utf8;
        return s;
    }
};

// Random glyph text. `space_weight` and `special_weight` skew the mix.
inline GlyphText random_glyph_text(std::mt19937_64& rng, std::size_t len, double space_weight = 0.18,
                                   double special_weight = 0.08, std::size_t alphabet_limit = 0) {
    const auto& g = glyphs();
    std::vector<std::size_t> letters, spaces, specials;
    for (std::size_t i = 0; i < g.size(); ++i) {
        switch (g[i].cls) {
            case CharClass::letter:
            case CharClass::digit: letters.push_back(i); break;
            case CharClass::space: spaces.push_back(i); break;
            case CharClass::special: specials.push_back(i); break;
        }
    }
    if (alphabet_limit > 0 && alphabet_limit < letters.size()) {
        letters.resize(alphabet_limit);
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GlyphText t;
    for (std::size_t k = 0; k < len; ++k) {
        const double r = u(rng);
        const auto& pool = r < space_weight ? spaces : (r < space_weight + special_weight ? specials : letters);
        t.idx.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
    }
    return t;
}

struct BruteMeasure {
    std::uint64_t word_count = 0;
    double char_repetition = 0.0;
    double word_repetition = 0.0;
    double special_ratio = 0.0;
    double stopword_ratio = 0.0;
    double flagged_ratio = 0.0;
};

inline std::vector<std::vector<std::size_t>> brute_words(const GlyphText& t) {
    std::vector<std::vector<std::size_t>> words;
    std::vector<std::size_t> cur;
    for (auto i : t.idx) {
        if (glyphs()[i].cls == CharClass::space) {
            if (!cur.empty()) words.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(i);
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

// Strip special glyphs at both ends, lowercase ASCII.
inline std::string brute_normalize_word(std::vector<std::size_t> w) {
    while (!w.empty() && glyphs()[w.front()].cls == CharClass::special) w.erase(w.begin());
    while (!w.empty() && glyphs()[w.back()].cls == CharClass::special) w.pop_back();
    std::string s;
    for (auto i : w) {
        std::string u = glyphs()[i].utf8;
        if (u.size() == 1 && u[0] >= 'A' && u[0] <= 'Z') u[0] = static_cast<char>(u[0] - 'A' + 'a');
        s += u;
    }
    return s;
}

inline BruteMeasure brute_measure(const GlyphText& t, const std::set<std::string>& stopwords,
                                  const std::set<std::string>& flagged) {
    BruteMeasure m;
    const std::size_t n = t.idx.size();
    if (n >= 3) {
        std::set<std::tuple<std::size_t, std::size_t, std::size_t>> grams;
        for (std::size_t i = 0; i + 2 < n; ++i) grams.insert({t.idx[i], t.idx[i + 1], t.idx[i + 2]});
        m.char_repetition = 1.0 - static_cast<double>(grams.size()) / static_cast<double>(n - 2);
    }
    if (n > 0) {
        std::size_t special = 0;
        for (auto i : t.idx) special += glyphs()[i].cls == CharClass::special ? 1 : 0;
        m.special_ratio = static_cast<double>(special) / static_cast<double>(n);
    }
    const auto words = brute_words(t);
    m.word_count = words.size();
    if (!words.empty()) {
        std::set<std::vector<std::size_t>> distinct(words.begin(), words.end());
        m.word_repetition = 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(words.size());
        std::size_t stop = 0, flag = 0;
        for (const auto& w : words) {
            const auto norm = brute_normalize_word(w);
            stop += stopwords.count(norm);
            flag += flagged.count(norm);
        }
        m.stopword_ratio = static_cast<double>(stop) / static_cast<double>(words.size());
        m.flagged_ratio = static_cast<double>(flag) / static_cast<double>(words.size());
    }
    return m;
}

// ---------------------------------------------------------------- metrics

inline double brute_accuracy(const std::vector<int>& gold, const std::vector<int>& pred) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == pred[i];
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

// Per-class F1 from a full confusion matrix; `present_rule` gives 1 to classes
// absent from both gold and prediction.
inline double brute_class_f1(const std::vector<int>& gold, const std::vector<int>& pred, int cls, bool present_rule) {
    std::map<std::pair<int, int>, long> cm;
    for (std::size_t i = 0; i < gold.size(); ++i) cm[{gold[i], pred[i]}]++;
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [k, v] : cm) {
        if (k.first == cls && k.second == cls) tp += v;
        else if (k.first != cls && k.second == cls) fp += v;
        else if (k.first == cls && k.second != cls) fn += v;
    }
    if (present_rule && tp + fp + fn == 0) return 1.0;
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
}

inline double brute_macro_f1(const std::vector<int>& gold, const std::vector<int>& pred, const std::vector<int>& classes) {
    double s = 0.0;
    for (int c : classes) s += brute_class_f1(gold, pred, c, true);
    return s / static_cast<double>(classes.size());
}

// Pearson via the pairwise-difference identity
// cov ∝ sum_{i<j} (x_i - x_j)(y_i - y_j), evaluated in long double.
inline std::optional<double> brute_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const long double dx = static_cast<long double>(x[i]) - x[j];
            const long double dy = static_cast<long double>(y[i]) - y[j];
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// ---------------------------------------------------------------- tokenizer

inline std::size_t utf8_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;
}

// Linear scan over every piece at every position. `pieces[i]` has id `first_id + i`.
inline std::vector<int> brute_tokenize_word(const std::string& word, const std::vector<std::string>& pieces, int first_id,
                                            int unk) {
    std::vector<int> out;
    std::size_t pos = 0;
    bool in_unk = false;
    while (pos < word.size()) {
        int best = -1;
        std::size_t best_len = 0;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const std::string& p = pieces[i];
            const bool cont = p.size() > 2 && p[0] == '#' && p[1] == '#';
            if ((pos == 0) == cont) continue;
            const std::string body = cont ? p.substr(2) : p;
            if (body.empty() || body.size() <= best_len) continue;
            if (word.compare(pos, body.size(), body) == 0) {
                best = first_id + static_cast<int>(i);
                best_len = body.size();
            }
        }
        if (best >= 0) {
            out.push_back(best);
            pos += best_len;
            in_unk = false;
        } else {
            if (!in_unk) out.push_back(unk);
            in_unk = true;
            pos += utf8_len(static_cast<unsigned char>(word[pos]));
        }
    }
    return out;
}

}  // namespace ptkit::oracle
