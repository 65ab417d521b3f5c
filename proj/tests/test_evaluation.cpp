#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/QR>

#include "dsfs/error.hpp"
#include "dsfs/evaluation.hpp"

using namespace dsfs;
using namespace dsfs::eval;

namespace {

// P(score_t > score_n) + 1/2 P(equal) over all target/non-target pairs.
double pair_counting_auc(const std::vector<ScoredTrial>& trials) {
    double wins = 0.0, pairs = 0.0;
    for (const auto& t : trials) {
        if (!t.is_target) continue;
        for (const auto& n : trials) {
            if (n.is_target) continue;
            pairs += 1.0;
            if (t.score > n.score) wins += 1.0;
            else if (t.score == n.score) wins += 0.5;
        }
    }
    return wins / pairs;
}

Eigen::MatrixXd orthonormal(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (auto& v : m.reshaped()) v = g(rng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

}  // namespace

TEST_CASE("dsq reference values") {
    const Eigen::MatrixXd q = orthonormal(30, 10, 1);
    CHECK(std::abs(dsq(q, q) - std::sqrt(10.0)) <= 1e-12);

    const Eigen::MatrixXd full = orthonormal(30, 20, 2);
    CHECK(std::abs(dsq(full.leftCols(10), full.rightCols(10))) <= 1e-12);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd a(25, 6), b(25, 6);
        for (auto& v : a.reshaped()) v = g(rng);
        for (auto& v : b.reshaped()) v = g(rng);
        CHECK(std::abs(dsq(a, b) - dsq(b, a)) <= 1e-12);
        CHECK(dsq(3.0 * a, b) == doctest::Approx(dsq(a, b)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(dsq(q, full), DataError);
}

TEST_CASE("roc: fixed cases") {
    const auto perfect = roc_metrics({{0.9, true}, {0.8, true}, {0.2, false}, {0.1, false}});
    CHECK(perfect.auc == 1.0);
    CHECK(perfect.aupr == 1.0);
    CHECK(perfect.pauc_normalized == doctest::Approx(1.0));

    const auto tied = roc_metrics({{1, true}, {1, false}});
    CHECK(tied.auc == 0.5);
    const auto tied3 = roc_metrics({{1, true}, {1, false}, {1, false}, {1, false}});
    CHECK(tied3.aupr == doctest::Approx(0.25));

    std::vector<ScoredTrial> inter;
    for (int i = 0; i < 8; ++i) inter.push_back({8.0 - i, i % 2 == 0});
    CHECK(roc_metrics(inter).auc == doctest::Approx(pair_counting_auc(inter)).epsilon(1e-12));
    CHECK(roc_metrics(inter).auc == doctest::Approx(10.0 / 16.0));

    const auto inverted = roc_metrics({{0.1, true}, {0.9, false}});
    CHECK(inverted.auc == 0.0);

    CHECK_THROWS_AS(roc_metrics({{1, true}, {2, true}}), DataError);
    CHECK_THROWS_AS(roc_metrics({{1, true}, {2, false}}, 0.0), ConfigError);
}

TEST_CASE("roc: sweep equals pair counting and curves are monotone") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coarse(0, 6);  // forces many ties
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 199);
        std::vector<ScoredTrial> ts;
        for (std::size_t i = 0; i < n; ++i) {
            const bool target = i == 0 || (i != 1 && (rng() & 1));
            const double score = trial % 2 ? static_cast<double>(coarse(rng)) : g(rng) + (target ? 0.7 : 0.0);
            ts.push_back({score, target});
        }
        const auto s = roc_metrics(ts);
        CHECK(std::abs(s.auc - pair_counting_auc(ts)) <= 1e-12);
        CHECK(std::abs(roc_metrics(ts, 1.0).pauc - s.auc) <= 1e-12);
        CHECK(s.pauc <= 0.1 + 1e-15);
        CHECK(s.pauc_normalized >= 0.0);
        CHECK(s.pauc_normalized <= 1.0 + 1e-12);
        CHECK(s.aupr >= 0.0);
        CHECK(s.aupr <= 1.0 + 1e-12);
        for (std::size_t k = 1; k < s.roc.size(); ++k) {
            CHECK(s.roc[k].x >= s.roc[k - 1].x);
            CHECK(s.roc[k].y >= s.roc[k - 1].y);
        }
        CHECK(s.roc.back().x == 1.0);
        CHECK(s.roc.back().y == 1.0);
    }
}

TEST_CASE("pauc interpolates inside a segment") {
    // ROC: (0,0) -> (0.5, 1): the part below fpr 0.1 is a triangle of height 0.2.
    const auto s = roc_metrics({{1, true}, {1, false}, {0, false}}, 0.1);
    CHECK(s.pauc == doctest::Approx(0.5 * 0.1 * 0.2));
    CHECK(s.pauc_normalized == doctest::Approx(0.1));
}

TEST_CASE("svg output") {
    const auto s = roc_metrics({{0.9, true}, {0.3, true}, {0.5, false}, {0.1, false}});
    const std::string svg = curves_svg({{"augmented", &s}}, "test");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("augmented") != std::string::npos);
}
