#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "stamp/errors.hpp"
#include "stamp/linalg.hpp"
#include "stamp/metrics.hpp"

using namespace stamp;

namespace {

// Independent oracle: direct enumeration of all (positive, negative) pairs.
// Integer numerator (2 per win, 1 per tie) divided once, exactly like the
// rank-based implementation divides its integer numerator.
double auc_pair_oracle(const std::vector<double>& s, const std::vector<int>& y) {
    std::int64_t numer = 0, n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        ++n_pos;
        for (size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            if (s[i] > s[j]) numer += 2;
            else if (s[i] == s[j]) numer += 1;
        }
    }
    for (int v : y) n_neg += (v == 0);
    return static_cast<double>(numer) / static_cast<double>(2 * n_pos * n_neg);
}

} // namespace

TEST_CASE("auc on the worked examples") {
    CHECK(auc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 1, 0, 0}) == 1.0);
    CHECK(auc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1, 0}) == 0.5);
    CHECK(auc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 0, 1, 0}) == 0.75);
}

TEST_CASE("auc requires both classes") {
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
    CHECK_THROWS_AS(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0}), MetricError);
}

TEST_CASE("auc equals pair enumeration exactly, ties included") {
    Rng rng(31);
    std::uniform_int_distribution<int> size_dist(2, 200), level_dist(0, 9), bit(0, 1);
    for (int t = 0; t < 300; ++t) {
        const int n = size_dist(rng);
        std::vector<double> s(static_cast<size_t>(n));
        std::vector<int> y(static_cast<size_t>(n));
        bool has0 = false, has1 = false;
        for (int i = 0; i < n; ++i) {
            s[static_cast<size_t>(i)] = level_dist(rng) / 10.0; // heavy ties
            y[static_cast<size_t>(i)] = bit(rng);
            (y[static_cast<size_t>(i)] ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        CHECK(auc(s, y) == auc_pair_oracle(s, y));
    }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
    Rng rng(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(30);
        std::vector<int> y(30);
        for (size_t i = 0; i < s.size(); ++i) {
            s[i] = u(rng);
            y[i] = bit(rng);
        }
        y[0] = 0;
        y[1] = 1;
        std::vector<double> warped(s.size());
        for (size_t i = 0; i < s.size(); ++i) warped[i] = std::exp(3.0 * s[i]) - 7.0;
        CHECK(auc(s, y) == doctest::Approx(auc(warped, y)).epsilon(1e-12));
    }
}

TEST_CASE("auc complement identity for tie-free scores") {
    Rng rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> bit(0, 1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> s(25);
        std::vector<int> y(25), flipped(25);
        for (size_t i = 0; i < s.size(); ++i) {
            s[i] = u(rng); // continuous draws, ties have measure zero
            y[i] = bit(rng);
            flipped[i] = 1 - y[i];
        }
        y[0] = 0;
        y[1] = 1;
        flipped[0] = 1;
        flipped[1] = 0;
        CHECK(auc(s, y) + auc(s, flipped) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("threshold metrics on the worked examples") {
    SUBCASE("perfect predictions") {
        const auto m = threshold_metrics(std::vector<double>{0.9, 0.8, 0.1, 0.2},
                                         std::vector<int>{1, 1, 0, 0}, 0.5,
                                         Averaging::binary);
        CHECK(m.acc == 1.0);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    SUBCASE("all-negative predictor on a balanced set") {
        const auto m = threshold_metrics(std::vector<double>{0.1, 0.2, 0.3, 0.4},
                                         std::vector<int>{1, 0, 1, 0}, 0.5,
                                         Averaging::binary);
        CHECK(m.recall == 0.0);
        CHECK(m.f1 == 0.0);
        CHECK(m.acc == 0.5);
    }
    SUBCASE("hand-built confusion matrix") {
        const auto m = threshold_metrics(std::vector<double>{0.9, 0.6, 0.4, 0.2},
                                         std::vector<int>{1, 0, 1, 0}, 0.5,
                                         Averaging::binary);
        CHECK(m.precision == 0.5);
        CHECK(m.recall == 0.5);
        CHECK(m.f1 == 0.5);
        CHECK(m.acc == 0.5);
    }
}

TEST_CASE("threshold metrics against a brute-force confusion matrix") {
    Rng rng(34);
    std::uniform_int_distribution<int> size_dist(2, 60), bit(0, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const int n = size_dist(rng);
        std::vector<double> s(static_cast<size_t>(n));
        std::vector<int> y(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            s[static_cast<size_t>(i)] = u(rng);
            y[static_cast<size_t>(i)] = bit(rng);
        }
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (int i = 0; i < n; ++i) {
            const bool pred = s[static_cast<size_t>(i)] >= 0.5;
            if (y[static_cast<size_t>(i)] == 1) pred ? ++tp : ++fn;
            else pred ? ++fp : ++tn;
        }
        const auto m = threshold_metrics(s, y, 0.5, Averaging::binary);
        CHECK(m.acc == doctest::Approx((tp + tn) / n).epsilon(1e-12));
        const double prec = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
        const double rec = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
        CHECK(m.precision == doctest::Approx(prec).epsilon(1e-12));
        CHECK(m.recall == doctest::Approx(rec).epsilon(1e-12));
        for (auto avg : {Averaging::binary, Averaging::macro, Averaging::weighted}) {
            if (avg != Averaging::binary && (tp + fn == 0 || fp + tn == 0)) continue;
            const auto mm = threshold_metrics(s, y, 0.5, avg);
            for (double v : {mm.acc, mm.precision, mm.recall, mm.f1}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
}

TEST_CASE("macro and weighted averaging need both classes") {
    CHECK_THROWS_AS(threshold_metrics(std::vector<double>{0.9, 0.8},
                                      std::vector<int>{1, 1}, 0.5, Averaging::macro),
                    MetricError);
    CHECK_NOTHROW(threshold_metrics(std::vector<double>{0.9, 0.8}, std::vector<int>{1, 1},
                                    0.5, Averaging::binary));
}

TEST_CASE("metrics_from_scores fills the record and counts reconcile") {
    std::vector<BagScore> scores = {{"a", 1, 0.9}, {"b", 0, 0.2}, {"c", 1, 0.7},
                                    {"d", 0, 0.4}};
    const auto rec = metrics_from_scores(scores, 0.5, Averaging::macro);
    CHECK(rec.n_pos == 2);
    CHECK(rec.n_neg == 2);
    CHECK(rec.total() == 4);
    CHECK(rec.auc == 1.0);
    CHECK(rec.acc == 1.0);
    // Identical inputs produce identical records.
    const auto rec2 = metrics_from_scores(scores, 0.5, Averaging::macro);
    CHECK(rec.auc == rec2.auc);
    CHECK(rec.f1 == rec2.f1);
}

TEST_CASE("records and scores CSV round-trips") {
    const auto dir = std::filesystem::temp_directory_path() / "stamp_test_metrics_csv";
    std::filesystem::create_directories(dir);

    MetricsRecord r;
    r.acc = 0.75;
    r.auc = 0.8125;
    r.precision = 0.7;
    r.recall = 0.6;
    r.f1 = 0.646;
    r.seed = 3;
    r.split = "test";
    r.tag = "stamp";
    r.n_pos = 10;
    r.n_neg = 12;
    write_records_csv({r}, (dir / "records.csv").string());
    const auto back = read_records_csv((dir / "records.csv").string());
    REQUIRE(back.size() == 1);
    CHECK(back[0].auc == r.auc);
    CHECK(back[0].tag == "stamp");
    CHECK(back[0].n_pos == 10);

    write_scores_csv({{"bag_1", 1, 0.875}}, (dir / "scores.csv").string());
    const auto s = read_scores_csv((dir / "scores.csv").string());
    REQUIRE(s.size() == 1);
    CHECK(s[0].bag_id == "bag_1");
    CHECK(s[0].score == 0.875);
}
