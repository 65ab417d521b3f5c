#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "dsfs/error.hpp"
#include "dsfs/sparse_classifier.hpp"
#include "oracles.hpp"

using namespace dsfs;
using namespace dsfs::sparse;

namespace {

// Random dictionary with n classes of q+1 columns over w x h images.
CrossDomainDictionary random_dictionary(std::size_t w, std::size_t h, std::size_t n, std::size_t q, unsigned seed,
                                        bool random_weights = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> uw(0.2, 1.0);
    std::vector<RoiRecord> stills(n);
    std::vector<synth::SyntheticSet> syn(q == 0 ? 0 : n);
    auto img = [&] {
        GrayImage im(w, h);
        for (double& v : im.data()) v = g(rng);
        return im;
    };
    for (std::size_t i = 0; i < n; ++i) {
        stills[i].subject_id = "id" + std::to_string(i);
        stills[i].image = img();
        if (q == 0) continue;
        syn[i].subject_id = stills[i].subject_id;
        for (std::size_t j = 0; j < q; ++j) syn[i].rois.push_back(img());
    }
    std::vector<double> weights(q, 1.0);
    if (random_weights)
        for (double& v : weights) v = uw(rng);
    DictionaryConfig cfg;
    if (random_weights) cfg.still_weight = uw(rng);
    return build_cross_domain_dictionary(stills, syn, weights, cfg);
}

Eigen::VectorXd weights_of(const CrossDomainDictionary& d) {
    return Eigen::Map<const Eigen::VectorXd>(d.column_weights.data(), static_cast<Eigen::Index>(d.column_weights.size()));
}

Eigen::VectorXd random_unit(Eigen::Index n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng);
    return v.normalized();
}

double block_share(const SparseSolution& s, std::size_t cls) {
    double total = 0.0;
    for (double b : s.block_norms) total += b;
    return s.block_norms[cls] / total;
}

}  // namespace

TEST_CASE("dictionary: layout, normalisation and weights") {
    std::vector<RoiRecord> stills(2);
    std::vector<synth::SyntheticSet> syn(2);
    for (std::size_t i = 0; i < 2; ++i) {
        stills[i].subject_id = "s" + std::to_string(i);
        stills[i].image = oracle::random_image(6, 5, 10 + static_cast<unsigned>(i));
        syn[i].subject_id = stills[i].subject_id;
        for (unsigned j = 0; j < 3; ++j) syn[i].rois.push_back(oracle::random_image(6, 5, 100 * (i + 1) + j));
    }
    const auto d = build_cross_domain_dictionary(stills, syn, {0.5, 0.3, 0.2});
    CHECK(d.columns.cols() == 8);
    CHECK(d.block_width() == 4);
    CHECK(d.rows() == 30);
    for (Eigen::Index c = 0; c < 8; ++c) CHECK(std::abs(d.columns.col(c).norm() - 1.0) <= 1e-12);
    CHECK(d.column_weights == std::vector<double>{1.0, 0.5, 0.3, 0.2, 1.0, 0.5, 0.3, 0.2});
    // Column-major: second row of the first column is pixel (0, 1).
    const double norm = Eigen::Map<const Eigen::VectorXd>(stills[0].image.data().data(), 30).norm();
    CHECK(d.columns(1, 0) == doctest::Approx(stills[0].image.at(0, 1) / norm));

    std::vector<synth::SyntheticSet> two(2);
    for (std::size_t i = 0; i < 2; ++i) {
        two[i].rois = {syn[i].rois[0], syn[i].rois[1]};
    }
    const auto w = build_cross_domain_dictionary(stills, two, {0.75, 0.25});
    CHECK(w.column_weights == std::vector<double>{1.0, 0.75, 0.25, 1.0, 0.75, 0.25});

    DictionaryConfig inv;
    inv.invert_weights = true;
    const auto wi = build_cross_domain_dictionary(stills, two, {0.75, 0.25}, inv);
    CHECK(wi.column_weights[1] == doctest::Approx(0.25));
    CHECK(wi.column_weights[2] == doctest::Approx(0.75));

    const auto base = build_cross_domain_dictionary(stills, {}, {});
    CHECK(base.q == 0);
    CHECK(base.columns.cols() == 2);

    auto bad = two;
    bad[1].rois.pop_back();
    CHECK_THROWS_AS(build_cross_domain_dictionary(stills, bad, {0.75, 0.25}), DataError);
    auto small = two;
    small[0].rois[0] = GrayImage(3, 3, 0.5);
    CHECK_THROWS_AS(build_cross_domain_dictionary(stills, small, {0.75, 0.25}), DataError);
    CHECK_THROWS_AS(build_cross_domain_dictionary(stills, two, {1.0, 0.0}), DataError);
}

TEST_CASE("dictionary container round trip") {
    const auto d = random_dictionary(5, 4, 3, 2, 7, true);
    const auto path = std::filesystem::temp_directory_path() / "dsfs_test_dict.bin";
    write_dictionary(path, d);
    const auto back = read_dictionary(path);
    CHECK(back.columns == d.columns);
    CHECK(back.column_weights == d.column_weights);
    CHECK(back.class_ids == d.class_ids);
    CHECK(back.q == 2);
    CHECK(back.width == 5);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    CHECK_THROWS_AS(read_dictionary(path), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("group prox") {
    Eigen::VectorXd v(2);
    v << 3, 4;
    const auto p = group_prox(v, 2.5);
    CHECK(p(0) == doctest::Approx(1.5));
    CHECK(p(1) == doctest::Approx(2.0));
    CHECK(group_prox(v, 5.0).isZero(0.0));
    CHECK(group_prox(v, 7.0).isZero(0.0));
    CHECK(group_prox(v, 0.0) == v);
}

TEST_CASE("sci values and properties") {
    CHECK(std::abs(sci_from_masses({0, 3, 0, 0}) - 1.0) <= 1e-12);
    CHECK(std::abs(sci_from_masses({2, 2, 2, 2}) - 0.0) <= 1e-12);
    CHECK(std::abs(sci_from_masses({0.75, 0.25}) - 0.5) <= 1e-12);
    CHECK(sci_from_masses({0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(sci_from_masses({1.0}), DataError);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd x(12);
        for (auto& v : x) v = g(rng);
        const double s = sci(x, 4);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(sci(3.7 * x, 4) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("solver: orthonormal design has the soft-threshold solution") {
    // n = 8 classes of width one over 16-dim identity columns.
    std::vector<RoiRecord> stills(8);
    for (std::size_t i = 0; i < 8; ++i) {
        stills[i].subject_id = std::to_string(i);
        stills[i].image = GrayImage(4, 4, 0.0);
        stills[i].image.data()[i] = 1.0;
    }
    const auto d = build_cross_domain_dictionary(stills, {}, {});
    const Eigen::VectorXd y = d.columns.col(0);
    SolverConfig cfg;
    cfg.tol_primal = cfg.tol_dual = 1e-10;
    const auto sol = solve_weighted_block_l1(d, y, cfg);
    CHECK(sol.converged);
    CHECK(sol.x(0) == doctest::Approx(1.0 - cfg.lambda).epsilon(1e-9));
    for (Eigen::Index c = 1; c < 8; ++c) CHECK(std::abs(sol.x(c)) <= 1e-8);
}

TEST_CASE("solver: exact column concentrates its block") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto d = random_dictionary(6, 5, 5, 3, seed);
        const std::size_t cls = seed % 5;
        const auto sol = solve_weighted_block_l1(d, d.columns.col(static_cast<Eigen::Index>(d.block_begin(cls) + 1)));
        CHECK(block_share(sol, cls) >= 0.99);
        CHECK(classify(sol) == cls);
    }
}

TEST_CASE("solver: objective matches the proximal-gradient oracle") {
    SolverConfig cfg;
    cfg.record_objective = true;
    cfg.max_iter = 20000;
    cfg.tol_primal = cfg.tol_dual = 1e-9;
    SUBCASE("fixed rho") { cfg.adaptive_rho = false; }
    SUBCASE("adaptive rho") { cfg.adaptive_rho = true; }
    CAPTURE(cfg.adaptive_rho);
    {
        const auto d = random_dictionary(5, 4, 4, 9, 77);
        const Eigen::VectorXd y = random_unit(20, 78);
        const auto sol = solve_weighted_block_l1(d, y, cfg);
        const Eigen::VectorXd xo = oracle::prox_gradient(d.columns, y, weights_of(d), 10, cfg.lambda);
        const double fo = oracle::weighted_group_objective(d.columns, y, xo, weights_of(d), 10, cfg.lambda);
        CHECK(sol.converged);
        CHECK(std::abs(objective(d, y, sol.x, cfg.lambda) - fo) <= 1e-4 * fo);
    }
    {
        for (unsigned seed = 0; seed < 50; ++seed) {
            const auto d = random_dictionary(5, 4, 4, 3, 1000 + seed, true);
            const Eigen::VectorXd y = random_unit(20, 2000 + seed);
            const auto sol = solve_weighted_block_l1(d, y, cfg);
            const Eigen::VectorXd xo = oracle::prox_gradient(d.columns, y, weights_of(d), 4, cfg.lambda);
            const double fo = oracle::weighted_group_objective(d.columns, y, xo, weights_of(d), 4, cfg.lambda);
            CHECK(sol.converged);
            CHECK(std::abs(objective(d, y, sol.x, cfg.lambda) - fo) <= 1e-4 * fo);
            for (std::size_t k = 1; k < sol.objective_trace.size(); ++k)
                CHECK(sol.objective_trace[k] <= sol.objective_trace[k - 1] + 1e-10);
        }
    }
}

TEST_CASE("solver: nearly collinear columns converge with residual balancing") {
    // Five unit columns sharing one dominant direction, like face stills.
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::vector<RoiRecord> stills(5);
    GrayImage common(12, 12);
    for (double& v : common.data()) v = 1.0 + 0.1 * g(rng);
    for (std::size_t i = 0; i < stills.size(); ++i) {
        stills[i].subject_id = "s" + std::to_string(i);
        stills[i].image = common;
        for (double& v : stills[i].image.data()) v += 0.05 * g(rng);
    }
    const auto d = build_cross_domain_dictionary(stills, {}, {});
    Eigen::VectorXd y = d.columns.col(2) + 0.02 * random_unit(144, 12);
    y.normalize();

    SolverConfig fixed;
    fixed.adaptive_rho = false;
    fixed.max_iter = 200000;
    fixed.tol_primal = fixed.tol_dual = 1e-10;
    const auto ref = solve_weighted_block_l1(d, y, fixed);
    REQUIRE(ref.converged);

    SolverConfig adaptive;
    const auto sol = solve_weighted_block_l1(d, y, adaptive);
    CHECK(sol.converged);
    CHECK(sol.iterations < 1000);
    CHECK(std::abs(objective(d, y, sol.x, adaptive.lambda) - objective(d, y, ref.x, adaptive.lambda)) <= 1e-6);
    CHECK(classify(sol) == 2);
}

TEST_CASE("solver: common weight scale is absorbed by lambda") {
    auto d = random_dictionary(5, 4, 4, 3, 31, true);
    const Eigen::VectorXd y = random_unit(20, 32);
    SolverConfig cfg;
    cfg.tol_primal = cfg.tol_dual = 1e-11;
    cfg.max_iter = 100000;
    const auto a = solve_weighted_block_l1(d, y, cfg);
    for (double& w : d.column_weights) w *= 0.4;
    cfg.lambda /= 0.4;
    const auto b = solve_weighted_block_l1(d, y, cfg);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("solver: equality mode recovers an exact member") {
    SolverConfig cfg;
    cfg.mode = SolverMode::equality;
    for (unsigned seed = 0; seed < 10; ++seed) {
        const auto d = random_dictionary(8, 8, 5, 3, 300 + seed, true);
        const std::size_t cls = 3;
        const auto sol = solve_weighted_block_l1(d, d.columns.col(static_cast<Eigen::Index>(d.block_begin(cls) + 2)), cfg);
        CHECK(classify(sol) == cls);
        CHECK(sol.residuals[cls] <= 1e-6);
        CHECK(sol.sci >= 0.9);
    }
}

TEST_CASE("solver: support recovery for a combination inside one block") {
    for (unsigned seed = 0; seed < 10; ++seed) {
        const auto d = random_dictionary(10, 10, 5, 3, 500 + seed);
        const std::size_t cls = seed % 5;
        const Eigen::VectorXd c = random_unit(4, 600 + seed).cwiseAbs();
        const Eigen::VectorXd y =
            (d.columns.middleCols(static_cast<Eigen::Index>(d.block_begin(cls)), 4) * c).normalized();
        const auto sol = solve_weighted_block_l1(d, y);
        CHECK(block_share(sol, cls) >= 0.95);
    }
}

TEST_CASE("classify: ties, orthogonal mixtures and scaling") {
    SparseSolution tie;
    tie.residuals = {0.4, 0.4, 0.4};
    CHECK(classify(tie) == 0);

    std::vector<RoiRecord> stills(3);
    for (std::size_t i = 0; i < 3; ++i) {
        stills[i].subject_id = std::to_string(i);
        stills[i].image = GrayImage(3, 1, 0.0);
        stills[i].image.data()[i] = 1.0;
    }
    const auto d = build_cross_domain_dictionary(stills, {}, {});
    const Eigen::VectorXd y = 0.6 * d.columns.col(1) + 0.4 * d.columns.col(2);
    const auto sol = solve_weighted_block_l1(d, y);
    CHECK(classify(sol) == 1);
    // Joint positive scaling of y and x scales every residual alike.
    SparseSolution scaled = sol;
    for (double& r : scaled.residuals) r *= 2.5;
    CHECK(classify(scaled) == classify(sol));
}

TEST_CASE("recognize: acceptance and rejection") {
    const auto d = random_dictionary(8, 8, 10, 2, 901);
    const BlockSparseSolver solver(d);
    const GrayImage still(8, 8, [&] {
        std::vector<double> v(64);
        for (std::size_t x = 0; x < 8; ++x)
            for (std::size_t y = 0; y < 8; ++y) v[y * 8 + x] = d.columns(static_cast<Eigen::Index>(x * 8 + y), 6);
        return v;
    }());
    const auto dec = recognize(still, solver, 0.3);
    CHECK(dec.accepted);
    CHECK(dec.class_index == 2);
    CHECK(dec.class_id == "id2");
    CHECK(dec.residual_ranking.front().first == 2);

    std::vector<double> scis;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int t = 0; t < 100; ++t) {
        GrayImage noise(8, 8);
        for (double& v : noise.data()) v = g(rng);
        const auto r = recognize(noise, solver, 0.9);
        scis.push_back(r.sci);
        CHECK(recognize(noise, solver, 0.0).accepted);
    }
    std::nth_element(scis.begin(), scis.begin() + 50, scis.end());
    CHECK(scis[50] < 0.9);

    CHECK_THROWS_AS(recognize(still, solver, 1.5), ConfigError);
    CHECK_THROWS_AS(solver.solve(Eigen::VectorXd::Ones(5)), DataError);
}

TEST_CASE("solver config validation") {
    const auto d = random_dictionary(5, 4, 2, 1, 1);
    SolverConfig cfg;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(BlockSparseSolver(d, cfg), ConfigError);
    cfg = {};
    cfg.rho = -1.0;
    CHECK_THROWS_AS(BlockSparseSolver(d, cfg), ConfigError);
}
