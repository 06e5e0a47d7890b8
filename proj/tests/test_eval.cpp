#include <cmath>
#include <random>

#include "doctest.h"
#include "phgnn/error.hpp"
#include "phgnn/eval.hpp"

using namespace phgnn;

namespace {

double pair_count_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

}  // namespace

TEST_CASE("confusion fixtures") {
    const std::vector<bool> all4(4, true);
    auto perfect = confusion(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 0, 1, 0}, all4);
    CHECK(perfect.fp == 0);
    CHECK(perfect.fn == 0);
    auto positive = confusion(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 0, 1, 0}, all4);
    CHECK(positive.tp == 2);
    CHECK(positive.fp == 2);
    CHECK(positive.tn == 0);
    CHECK(positive.fn == 0);

    ConfusionCounts c{3, 2, 2, 1};
    CHECK(c.sensitivity() == 0.75);
    CHECK(c.specificity() == 0.5);
    CHECK(c.balanced_accuracy() == 0.625);

    const std::vector<bool> mask{true, false, true, true};
    auto masked = confusion(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}, mask);
    CHECK(masked.tp + masked.fp + masked.tn + masked.fn == 3);
    CHECK_THROWS_AS(confusion(std::vector<int>{1}, std::vector<int>{1}, std::vector<bool>{false}), Error);
}

TEST_CASE("balanced accuracy identity on random confusions") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
        ConfusionCounts c{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
        CHECK(c.balanced_accuracy() == (c.sensitivity() + c.specificity()) / 2.0);
    }
}

TEST_CASE("argmax ties go to class 0") {
    CHECK(predict_labels(Matrix{{0, 0}, {1, 2}, {3, -1}}) == std::vector<int>{0, 1, 0});
}

TEST_CASE("constant predictor has balanced accuracy one half") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        std::vector<int> y(30);
        for (auto& v : y) v = static_cast<int>(rng() % 2);
        y[0] = 0, y[1] = 1;
        const std::vector<bool> mask(30, true);
        for (int label : {0, 1}) {
            std::vector<int> pred(30, label);
            CHECK(confusion(pred, y, mask).balanced_accuracy() == 0.5);
        }
    }
}

TEST_CASE("auc fixtures") {
    const std::vector<bool> all4(4, true);
    CHECK(auc(std::vector<double>{.9, .8, .3, .2}, std::vector<int>{1, 1, 0, 0}, all4) == 1.0);
    CHECK(auc(std::vector<double>{.5, .5, .5, .5}, std::vector<int>{1, 0, 1, 0}, all4) == 0.5);
    CHECK(auc(std::vector<double>{.8, .7, .6, .5}, std::vector<int>{1, 0, 1, 0}, all4) == 0.75);
    try {
        auc(std::vector<double>{.1, .2}, std::vector<int>{1, 1}, std::vector<bool>{true, true});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("AUC undefined") != std::string::npos);
    }
}

TEST_CASE("auc equals pair counting, is rank-invariant and flips with labels") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coarse(0, 9);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 40;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = coarse(rng) / 10.0, y[i] = static_cast<int>(rng() % 2);
        y[0] = 1, y[1] = 0;
        const std::vector<bool> mask(n, true);
        const double a = auc(s, y, mask);
        CHECK(a == pair_count_auc(s, y));
        std::vector<double> mapped(n);
        for (std::size_t i = 0; i < n; ++i) mapped[i] = std::exp(3.0 * s[i]) - 7.0;
        CHECK(auc(mapped, y, mask) == a);
        std::vector<int> flipped(n);
        for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
        CHECK(auc(s, flipped, mask) == doctest::Approx(1.0 - a).epsilon(1e-15));
    }
}

TEST_CASE("label swap exchanges sensitivity and specificity") {
    std::vector<int> pred{1, 0, 1, 1, 0, 0, 1}, y{1, 1, 0, 1, 0, 1, 0};
    std::vector<int> np(pred.size()), ny(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) np[i] = 1 - pred[i], ny[i] = 1 - y[i];
    const std::vector<bool> mask(y.size(), true);
    auto a = confusion(pred, y, mask), b = confusion(np, ny, mask);
    CHECK(a.sensitivity() == b.specificity());
    CHECK(a.specificity() == b.sensitivity());
}

TEST_CASE("metrics from logits use the first rows only") {
    Matrix logits{{0, 1}, {1, 0}, {0, 2}, {3, 0}, {9, 9}};
    std::vector<int> y{1, 0, 1, 0};
    Metrics m = evaluate_logits(logits, y, std::vector<bool>(4, true));
    CHECK(m.bacc == 1.0);
    CHECK(m.auc == 1.0);
    auto p = positive_scores(Matrix{{0, 0}, {0, std::log(3.0)}});
    CHECK(p[0] == 0.5);
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("fold aggregation") {
    Metrics a{0.7, 0.6, 0.8, 0.9}, b{0.8, 0.9, 0.7, 0.95};
    MetricsReport one = aggregate_folds(std::vector<Metrics>{a});
    CHECK(one.mean == a);
    CHECK(one.stddev == Metrics{});
    MetricsReport same = aggregate_folds(std::vector<Metrics>{a, a, a});
    CHECK(same.stddev.bacc == 0.0);
    MetricsReport two = aggregate_folds(std::vector<Metrics>{a, b});
    CHECK(two.mean.bacc == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(two.stddev.bacc == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(two.folds.size() == 2);
}

TEST_CASE("report formatting") {
    CHECK(format_cell(0.932, 0.006) == "93.2±0.6");
    MetricsReport r = aggregate_folds(std::vector<Metrics>{{0.7, 0.6, 0.8, 0.9}, {0.8, 0.9, 0.7, 0.95}});
    const std::string row = format_row("phgnn", r, 8);
    CHECK(row.rfind("phgnn   ", 0) == 0);
    CHECK(row.find("75.0±5.0") != std::string::npos);
    CHECK(row.find("92.5±2.5") != std::string::npos);
}
