#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ptkit/error.hpp"
#include "ptkit/metrics.hpp"
#include "test_support.hpp"

using namespace ptkit;
using namespace ptkit::metrics;

namespace {

std::vector<EvalPair<int>> pairs_of(const std::vector<int>& gold, const std::vector<int>& pred) {
    std::vector<EvalPair<int>> out;
    for (std::size_t i = 0; i < gold.size(); ++i) out.push_back({gold[i], pred[i]});
    return out;
}

}  // namespace

TEST_CASE("accuracy examples") {
    const auto all = pairs_of({1, 0, 1}, {1, 0, 1});
    CHECK(accuracy<int>(all) == 1.0);
    const auto half = pairs_of({1, 0, 1, 0}, {1, 1, 0, 0});
    CHECK(accuracy<int>(half) == 0.5);
    CHECK_THROWS_AS(accuracy<int>(std::vector<EvalPair<int>>{}), std::invalid_argument);
}

TEST_CASE("f1 examples") {
    CHECK(f1_from_counts({1, 1, 1}) == 0.5);
    CHECK(f1_from_counts({0, 0, 0}) == 0.0);
    CHECK(f1_from_counts({0, 3, 2}) == 0.0);
    const auto perfect = pairs_of({1, 0, 1, 1}, {1, 0, 1, 1});
    CHECK(binary_f1<int>(perfect, 1) == 1.0);
    // tp=1 (i0), fp=1 (i1), fn=1 (i2)
    const auto p = pairs_of({1, 0, 1, 0}, {1, 1, 0, 0});
    CHECK(binary_f1<int>(p, 1) == 0.5);
    CHECK_THROWS_AS(binary_f1<int>(std::vector<EvalPair<int>>{}, 1), std::invalid_argument);

    // Confusion [[2,0,0],[0,1,1],[0,0,2]], rows gold, columns predicted.
    const auto cb = pairs_of({0, 0, 1, 1, 2, 2}, {0, 0, 1, 2, 2, 2});
    const std::vector<int> classes{0, 1, 2};
    const double want = oracle::brute_macro_f1({0, 0, 1, 1, 2, 2}, {0, 0, 1, 2, 2, 2}, classes);
    CHECK(macro_f1<int>(cb, classes) == doctest::Approx(want).epsilon(1e-15));
    CHECK(want == doctest::Approx(37.0 / 45.0).epsilon(1e-15));

    // Absent class contributes 1.
    const auto two = pairs_of({0, 1}, {0, 1});
    CHECK(macro_f1<int>(two, classes) == 1.0);
    CHECK_THROWS_AS(macro_f1<int>(two, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("pearson examples") {
    const std::vector<double> g{1, 2, 3, 4};
    CHECK(*pearson(g, g) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> neg{-1, -2, -3, -4};
    CHECK(*pearson(g, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    const std::vector<double> p{1.1, 1.9, 3.2, 3.8};
    CHECK(std::abs(*pearson(g, p) - *oracle::brute_pearson(g, p)) <= 1e-12);
    // Direct formula: means 2.5, 2.5; sxy = 3.0 + ... evaluated by hand.
    const double sxy = (-1.5) * (-1.4) + (-0.5) * (-0.6) + 0.5 * 0.7 + 1.5 * 1.3;
    const double sxx = 5.0;
    const double syy = 1.96 + 0.36 + 0.49 + 1.69;
    CHECK(std::abs(*pearson(g, p) - sxy / std::sqrt(sxx * syy)) <= 1e-12);

    const std::vector<double> flat{3, 3, 3, 3};
    CHECK_FALSE(pearson(g, flat));
    CHECK_FALSE(pearson(flat, g));
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
    CHECK_THROWS_AS(pearson(g, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("metrics agree with brute-force oracles on random instances") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng() % 200;
        const int k = 2 + static_cast<int>(rng() % 3);
        std::vector<int> gold(n), pred(n);
        for (std::size_t j = 0; j < n; ++j) {
            gold[j] = static_cast<int>(rng() % k);
            pred[j] = static_cast<int>(rng() % k);
        }
        const auto pairs = pairs_of(gold, pred);
        const double acc = accuracy<int>(pairs);
        CHECK(std::abs(acc - oracle::brute_accuracy(gold, pred)) <= 1e-12);
        const double bf = binary_f1<int>(pairs, 1);
        CHECK(std::abs(bf - oracle::brute_class_f1(gold, pred, 1, false)) <= 1e-12);
        std::vector<int> classes;
        for (int c = 0; c < k; ++c) classes.push_back(c);
        const double mf = macro_f1<int>(pairs, classes);
        CHECK(std::abs(mf - oracle::brute_macro_f1(gold, pred, classes)) <= 1e-12);
        for (double v : {acc, bf, mf}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }

        // Permutation invariance.
        auto shuffled = pairs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(accuracy<int>(shuffled) == acc);
        CHECK(binary_f1<int>(shuffled, 1) == bf);
        CHECK(macro_f1<int>(shuffled, classes) == mf);

        if (n >= 2) {
            std::vector<double> x(n), y(n);
            std::normal_distribution<double> nd(0.0, 1.0);
            for (std::size_t j = 0; j < n; ++j) {
                x[j] = nd(rng) * 2.0 + 1.0;
                y[j] = 0.5 * x[j] + nd(rng);
            }
            const auto got = pearson(x, y);
            const auto want = oracle::brute_pearson(x, y);
            REQUIRE(got.has_value() == want.has_value());
            if (got) {
                CHECK(std::abs(*got - *want) <= 1e-12);
                CHECK(*got >= -1.0);
                CHECK(*got <= 1.0);
                const double a = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
                const double b = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
                std::vector<double> ax(n);
                for (std::size_t j = 0; j < n; ++j) ax[j] = a * x[j] + b;
                const auto affine = pearson(ax, y);
                REQUIRE(affine);
                CHECK(std::abs(*affine - *got) <= 1e-12);
            }
        }
    }
}

TEST_CASE("f1 equals accuracy on balanced class-symmetric fixtures") {
    // Two balanced classes with symmetric errors: every class F1 equals accuracy.
    for (int errors = 0; errors <= 10; ++errors) {
        std::vector<int> gold, pred;
        for (int i = 0; i < 20; ++i) {
            gold.push_back(0);
            pred.push_back(i < errors ? 1 : 0);
            gold.push_back(1);
            pred.push_back(i < errors ? 0 : 1);
        }
        const auto pairs = pairs_of(gold, pred);
        const std::vector<int> classes{0, 1};
        CHECK(std::abs(macro_f1<int>(pairs, classes) - oracle::brute_accuracy(gold, pred)) <= 1e-12);
        CHECK(std::abs(oracle::brute_macro_f1(gold, pred, classes) - accuracy<int>(pairs)) <= 1e-12);
    }
}

TEST_CASE("task scoring uses the assigned metric") {
    using nlohmann::json;
    const std::vector<json> cb_gold{"entailment", "entailment", "contradiction", "contradiction", "neutral", "neutral"};
    const std::vector<json> cb_pred{"entailment", "entailment", "contradiction", "neutral", "neutral", "neutral"};
    auto s = score_task(bench::task_spec(bench::TaskName::CB), cb_gold, cb_pred);
    CHECK(s.metric == bench::Metric::f1);
    CHECK(*s.value == doctest::Approx(37.0 / 45.0));

    const std::vector<json> bin_gold{1, 0, 1, 0};
    const std::vector<json> bin_pred{1, 1, 0, 0};
    s = score_task(bench::task_spec(bench::TaskName::MRPC), bin_gold, bin_pred);
    CHECK(*s.value == 0.5);
    s = score_task(bench::task_spec(bench::TaskName::BOOLQ), std::vector<json>{true, false}, std::vector<json>{1, 1});
    CHECK(*s.value == 0.5);

    s = score_task(bench::task_spec(bench::TaskName::STSB), std::vector<json>{1.0, 2.0, 3.0}, std::vector<json>{2.0, 2.0, 2.0});
    CHECK_FALSE(s.value);
    CHECK(format_score(s) == "pearson undefined");
    CHECK(format_score(Score{bench::Metric::f1, 0.63719, 4}) == "f1 0.6372");
}

TEST_CASE("scoring files") {
    testing::TempDir dir;
    const auto& spec = bench::task_spec(bench::TaskName::RTE);
    testing::write_file(dir / "gold.jsonl",
                        R"({"example_id":"a","sentence1":"x","sentence2":"y","label":1})"
                        "\n"
                        R"({"example_id":"b","sentence1":"x","sentence2":"y","label":0})"
                        "\n");
    testing::write_file(dir / "pred.jsonl", R"({"example_id":"b","label":0})"
                                            "\n"
                                            R"({"example_id":"a","label":0})"
                                            "\n");
    const auto s = score_files(spec, dir / "gold.jsonl", dir / "pred.jsonl");
    CHECK(*s.value == 0.5);
    CHECK(s.pairs == 2);

    testing::write_file(dir / "short.jsonl", R"({"example_id":"a","label":1})"
                                             "\n");
    CHECK_THROWS_AS(score_files(spec, dir / "gold.jsonl", dir / "short.jsonl"), DataError);
    testing::write_file(dir / "badlabel.jsonl", R"({"example_id":"a","label":7})"
                                                "\n");
    CHECK_THROWS_AS(score_files(spec, dir / "gold.jsonl", dir / "badlabel.jsonl"), DataError);
    CHECK_THROWS_AS(score_files(spec, dir / "gold.jsonl", dir / "nope.jsonl"), IoError);
}
