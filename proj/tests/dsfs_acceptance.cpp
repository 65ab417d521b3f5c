// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/QR>

#include "dsfs/benchmark.hpp"
#include "dsfs/capture_metrics.hpp"
#include "dsfs/decomposition.hpp"
#include "dsfs/delaunay.hpp"
#include "dsfs/evaluation.hpp"
#include "dsfs/exemplar_selection.hpp"
#include "dsfs/render.hpp"
#include "dsfs/shape_model.hpp"
#include "dsfs/sparse_classifier.hpp"
#include "dsfs/synthesis.hpp"
#include "dsfs/warp.hpp"
#include "oracles.hpp"

using namespace dsfs;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

char buf[512];

template <typename... A>
std::string fmt(const char* f, A... a) {
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---- 1 ----------------------------------------------------------------------

Outcome metric_oracle() {
    std::mt19937_64 rng(101);
    metrics::MetricConfig cfg;
    double worst = 0.0;
    bool exact_one = true;
    for (int t = 0; t < 25; ++t) {
        const GrayImage r = oracle::random_image(64, 64, rng);
        const GrayImage g = oracle::random_image(64, 64, rng);
        worst = std::max(worst, rel_err(metrics::glq(r, g, cfg),
                                        oracle::windowed_similarity(r, g, cfg.window, cfg.stride, cfg.k_l, 1.0, false)));
        worst = std::max(worst, rel_err(metrics::gcq(r, g, cfg),
                                        oracle::windowed_similarity(r, g, cfg.window, cfg.stride, cfg.k_c, 1.0, true)));
        exact_one = exact_one && metrics::glq(r, r, cfg) == 1.0 && metrics::gcq(g, g, cfg) == 1.0;
    }
    return {worst <= 1e-12 && exact_one, fmt("max rel err %.2e, self-similarity exactly 1: %s", worst,
                                             exact_one ? "yes" : "no")};
}

// ---- 2 ----------------------------------------------------------------------

Outcome hand_values() {
    GrayImage checker(16, 16);
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x) checker.at(x, y) = (x + y) % 2 ? 1.0 : 0.0;
    struct Case {
        double got, want;
    };
    const Case cases[] = {
        {metrics::glq(GrayImage(16, 16, 0.0), GrayImage(16, 16, 1.0)), 1e-4 / 1.0001},
        {metrics::glq(GrayImage(16, 16, 0.4), GrayImage(16, 16, 0.2)), 0.1601 / 0.2001},
        {metrics::gcq(checker, GrayImage(16, 16, 0.5)), 9e-4 / 0.2509},
    };
    bool ok = true;
    std::string d;
    for (const auto& c : cases) {
        ok = ok && rel_err(c.got, c.want) <= 5e-7;
        d += fmt("%.6g ", c.got);
    }
    return {ok, "values " + d + "(6 significant figures)"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome ap_properties() {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> nd;
    std::size_t bad_member = 0, bad_argmax = 0, bad_net = 0, ref_agrees = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<std::vector<double>> pts(5, std::vector<double>(2));
        for (auto& p : pts)
            for (double& v : p) v = nd(rng);
        const auto s = cluster::negative_squared_distances(pts);
        const double pref = s.median_off_diagonal();
        const auto res = cluster::ap_cluster(s);
        for (std::size_t e : res.exemplar_indices)
            if (e >= pts.size() || res.assignment[e] != e) ++bad_member;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const std::size_t e = res.assignment[i];
            for (std::size_t k = 0; k < pts.size(); ++k)
                if (res.state.a(i, e) + res.state.r(i, e) < res.state.a(i, k) + res.state.r(i, k)) {
                    ++bad_argmax;
                    break;
                }
        }
        double best_single = -1e300;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            double v = pref;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (i != k) v += s(i, k);
            best_single = std::max(best_single, v);
        }
        if (cluster::net_similarity(s, res.assignment, pref) < best_single - 1e-12) {
            // AP is a heuristic; check whether the textbook iteration lands in
            // the same local optimum.
            ++bad_net;
            std::vector<std::vector<double>> dense(pts.size(), std::vector<double>(pts.size()));
            for (std::size_t i = 0; i < pts.size(); ++i)
                for (std::size_t k = 0; k < pts.size(); ++k) dense[i][k] = s(i, k);
            const auto ref = oracle::reference_ap(dense, pref);
            if (oracle::partition(ref.assignment) == oracle::partition(res.assignment)) ++ref_agrees;
        }
    }

    const auto s3 = cluster::pose_similarities({{0, 0, 0}, {0, 1, 0}, {0, 60, 0}});
    std::vector<std::vector<double>> dense(3, std::vector<double>(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k) dense[i][k] = s3(i, k);
    const auto ours = cluster::ap_cluster(s3);
    const auto ref = oracle::reference_ap(dense, s3.median_off_diagonal());
    const bool fixture = oracle::partition(ours.assignment) == oracle::partition(ref.assignment);
    return {bad_member + bad_argmax + bad_net == 0 && fixture,
            fmt("violations: exemplar %zu, argmax %zu, below best single exemplar %zu (reference message passing "
                "agrees on %zu of them); 3-point fixture %s (%zu clusters)",
                bad_member, bad_argmax, bad_net, ref_agrees, fixture ? "matches" : "differs", ours.cluster_count())};
}

// ---- 4 ----------------------------------------------------------------------

Outcome weight_contract() {
    // Pose groups far apart in yaw; inside each, at least two tight lighting
    // clumps of planted sizes. Expected weight of each clump is size / n. A
    // group with a single clump has no lighting structure: median preference
    // then splits the jitter itself.
    struct Group {
        double yaw;
        std::vector<std::pair<std::vector<double>, std::size_t>> clumps;  // (l, c), size
    };
    const std::vector<Group> groups = {
        {-40, {{{0.9, 0.9}, 6}, {{0.3, 0.4}, 3}}},
        {0, {{{0.9, 0.8}, 4}, {{0.5, 0.3}, 4}, {{0.2, 0.9}, 2}}},
        {40, {{{0.6, 0.6}, 3}, {{0.95, 0.2}, 2}}},
    };
    std::mt19937_64 rng(404);
    std::normal_distribution<double> jit(0.0, 0.005), pj(0.0, 1.0);
    std::vector<metrics::ConditionVector> cv;
    std::vector<std::size_t> clump_of;
    std::vector<double> planted;
    for (const auto& g : groups)
        for (const auto& [lc, size] : g.clumps) {
            for (std::size_t k = 0; k < size; ++k) {
                metrics::ConditionVector c;
                c.pose = {pj(rng), g.yaw + pj(rng), pj(rng)};
                c.luminance = lc[0] + jit(rng);
                c.contrast = lc[1] + jit(rng);
                cv.push_back(c);
                clump_of.push_back(planted.size());
            }
            planted.push_back(static_cast<double>(size));
        }
    for (double& w : planted) w /= static_cast<double>(cv.size());

    const auto set = cluster::two_step_select(cv);
    double sum = 0.0;
    for (double w : set.weights) sum += w;
    bool match = set.size() == planted.size();
    std::vector<bool> seen(planted.size(), false);
    for (std::size_t j = 0; match && j < set.size(); ++j) {
        const std::size_t c = clump_of[set.exemplars[j].roi_index];
        const double nij = static_cast<double>(set.exemplars[j].cluster_size) / static_cast<double>(cv.size());
        match = !seen[c] && set.weights[j] == planted[c] && set.weights[j] == nij;
        seen[c] = true;
    }

    // One pose, lighting clusters {3, 1}.
    std::vector<metrics::ConditionVector> small(4);
    const double lc[4][2] = {{0.90, 0.90}, {0.91, 0.90}, {0.90, 0.91}, {0.30, 0.40}};
    for (std::size_t i = 0; i < 4; ++i) {
        small[i].pose = {0, 10, 0};
        small[i].luminance = lc[i][0];
        small[i].contrast = lc[i][1];
    }
    const auto s31 = cluster::two_step_select(small);
    const bool small_ok = s31.weights == std::vector<double>{0.75, 0.25} && s31.exemplars[1].roi_index == 3;

    const bool ok = std::abs(sum - 1.0) <= 1e-12 && match && small_ok;
    return {ok, fmt("sum - 1 = %.1e, %zu exemplars for %zu planted clusters, weights %s; {3, 1} fixture %s",
                    sum - 1.0, set.size(), planted.size(), match ? "equal n_ij/n" : "differ",
                    small_ok ? "0.75/0.25" : "wrong")};
}

// ---- 5, 6 -------------------------------------------------------------------

sparse::CrossDomainDictionary random_dictionary(std::size_t w, std::size_t h, std::size_t n, std::size_t q,
                                                std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> uw(0.2, 1.0);
    auto img = [&] {
        GrayImage im(w, h);
        for (double& v : im.data()) v = g(rng);
        return im;
    };
    std::vector<RoiRecord> stills(n);
    std::vector<synth::SyntheticSet> syn(n);
    for (std::size_t i = 0; i < n; ++i) {
        stills[i].subject_id = "id" + std::to_string(i);
        stills[i].image = img();
        syn[i].subject_id = stills[i].subject_id;
        for (std::size_t j = 0; j < q; ++j) syn[i].rois.push_back(img());
    }
    std::vector<double> weights(q);
    for (double& v : weights) v = uw(rng);
    sparse::DictionaryConfig cfg;
    cfg.still_weight = uw(rng);
    return sparse::build_cross_domain_dictionary(stills, syn, weights, cfg);
}

Outcome solver_oracle() {
    std::mt19937_64 rng(505);
    std::normal_distribution<double> g;
    sparse::SolverConfig cfg;  // lambda 0.005
    cfg.record_objective = true;
    cfg.tol_primal = cfg.tol_dual = 1e-9;
    cfg.max_iter = 20000;
    double worst = 0.0;
    std::size_t nonmono = 0, unconverged = 0, max_it = 0;
    for (int t = 0; t < 50; ++t) {
        const auto d = random_dictionary(5, 4, 4, 3, rng);
        Eigen::VectorXd y(20);
        for (auto& v : y) v = g(rng);
        y.normalize();
        const Eigen::VectorXd w =
            Eigen::Map<const Eigen::VectorXd>(d.column_weights.data(), static_cast<Eigen::Index>(d.column_weights.size()));
        const auto sol = sparse::solve_weighted_block_l1(d, y, cfg);
        const Eigen::VectorXd xo = oracle::prox_gradient(d.columns, y, w, 4, cfg.lambda, 1e-10);
        const double fo = oracle::weighted_group_objective(d.columns, y, xo, w, 4, cfg.lambda);
        worst = std::max(worst, rel_err(sparse::objective(d, y, sol.x, cfg.lambda), fo));
        if (!sol.converged) ++unconverged;
        max_it = std::max(max_it, sol.iterations);
        for (std::size_t k = 1; k < sol.objective_trace.size(); ++k)
            if (sol.objective_trace[k] > sol.objective_trace[k - 1] + 1e-10) {
                ++nonmono;
                break;
            }
    }
    return {worst <= 1e-4 && nonmono == 0 && unconverged == 0,
            fmt("max rel objective gap %.2e, non-monotone traces %zu, unconverged %zu, max iterations %zu", worst,
                nonmono, unconverged, max_it)};
}

Outcome exact_member() {
    std::mt19937_64 rng(606);
    sparse::SolverConfig cfg;
    cfg.mode = sparse::SolverMode::equality;
    std::size_t wrong = 0;
    double worst_res = 0.0, min_sci = 1.0;
    for (int t = 0; t < 100; ++t) {
        const auto d = random_dictionary(8, 8, 5, 3, rng);
        const std::size_t cls = rng() % d.class_count();
        const std::size_t col = d.block_begin(cls) + rng() % d.block_width();
        const auto sol = sparse::solve_weighted_block_l1(d, d.columns.col(static_cast<Eigen::Index>(col)), cfg);
        if (sparse::classify(sol) != cls) ++wrong;
        worst_res = std::max(worst_res, sol.residuals[cls]);
        min_sci = std::min(min_sci, sol.sci);
    }
    return {wrong == 0 && worst_res <= 1e-6 && min_sci >= 0.9,
            fmt("wrong labels %zu, max winning residual %.2e, min SCI %.6f", wrong, worst_res, min_sci)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome sci_values() {
    const double a = sparse::sci_from_masses({0, 3, 0, 0});
    const double b = sparse::sci_from_masses({2, 2, 2, 2});
    const double c = sparse::sci_from_masses({0.75, 0.25});
    Eigen::VectorXd x(4);
    x << 0.5, -0.25, 0.1, 0.15;  // blocks of two: masses 0.75, 0.25
    const double d = sparse::sci(x, 2);
    const bool ok = std::abs(a - 1) <= 1e-12 && std::abs(b) <= 1e-12 && std::abs(c - 0.5) <= 1e-12 &&
                    std::abs(d - 0.5) <= 1e-12;
    return {ok, fmt("concentrated %.15g, uniform %.15g, (0.75, 0.25) %.15g / %.15g", a, b, c, d)};
}

// ---- 8 ----------------------------------------------------------------------

Outcome synthesis_contracts() {
    std::string d;
    bool ok = true;

    const auto model = synth::procedural_head();
    bench::BenchmarkConfig bc;
    const auto split = bench::make_split(bc, model, 0);

    double worst_rms = 0.0;
    for (const auto& r : split.gallery) {
        const auto dec = synth::decompose(r.image);
        worst_rms = std::max(worst_rms, rms_difference(dec.reconstruct(), r.image));
    }
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& r = split.generic[i];
        worst_rms = std::max(worst_rms, rms_difference(synth::decompose(r.image).reconstruct(), r.image));
    }
    ok = ok && worst_rms <= 1e-3;
    d += fmt("reconstruction rms %.1e", worst_rms);

    const GrayImage src = oracle::random_image(32, 32, 808u);
    const Landmarks lms{{0, 0}, {31, 0}, {31, 31}, {0, 31}, {10.3, 12.7}, {20.1, 9.4}, {15.5, 22.2}};
    const GrayImage same = synth::piecewise_affine_warp(src, lms, lms, synth::delaunay(lms), 32, 32);
    bool identity = true;
    for (std::size_t i = 0; i < src.size(); ++i) identity = identity && same.data()[i] == src.data()[i];
    ok = ok && identity;
    d += identity ? ", identity warp exact" : ", identity warp differs";

    std::mt19937_64 rng(809);
    std::uniform_real_distribution<double> ang(-180, 180);
    double worst_orth = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Matrix3d m = synth::rotation_matrix({ang(rng), ang(rng), ang(rng)});
        worst_orth = std::max(worst_orth, (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
        worst_orth = std::max(worst_orth, std::abs(m.determinant() - 1.0));
    }
    ok = ok && worst_orth <= 1e-10;
    d += fmt(", rotation error %.1e", worst_orth);

    // Brute force: no point strictly inside any circumcircle, computed here
    // from the circumcentre rather than the library predicate.
    std::uniform_real_distribution<double> u(0, 10);
    std::size_t violations = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial % 10);
        std::vector<Point2> p;
        for (std::size_t i = 0; i < n; ++i) p.push_back({u(rng), u(rng)});
        for (const auto& t : synth::delaunay(p)) {
            const Point2 &a = p[t[0]], &b = p[t[1]], &c = p[t[2]];
            const double den = 2 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
            const double a2 = a.x * a.x + a.y * a.y, b2 = b.x * b.x + b.y * b.y, c2 = c.x * c.x + c.y * c.y;
            const double ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / den;
            const double uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / den;
            const double r2 = (a.x - ux) * (a.x - ux) + (a.y - uy) * (a.y - uy);
            for (std::size_t k = 0; k < n; ++k) {
                if (k == t[0] || k == t[1] || k == t[2]) continue;
                const double d2 = (p[k].x - ux) * (p[k].x - ux) + (p[k].y - uy) * (p[k].y - uy);
                if (d2 < r2 * (1 - 1e-9)) ++violations;
            }
        }
    }
    ok = ok && violations == 0;
    d += fmt(", circumcircle violations %zu", violations);

    const auto set = cluster::two_step_select(split.generic, split.gallery.front().image);
    std::vector<RoiRecord> rois;
    for (const auto& e : set.exemplars) rois.push_back(split.generic[e.roi_index]);
    std::size_t wrong_count = 0, failures = 0;
    for (const auto& still : split.gallery) {
        const auto out = synth::dsfs_generate(still, set, rois, model, {});
        if (out.size() != set.size()) ++wrong_count;
        failures += out.failure_count();
    }
    ok = ok && wrong_count == 0 && set.size() > 0;
    d += fmt(", q = %zu ROIs per still (%zu mismatches, %zu fallbacks)", set.size(), wrong_count, failures);
    return {ok, d};
}

// ---- 9 ----------------------------------------------------------------------

Eigen::MatrixXd orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (auto& v : m.reshaped()) v = g(rng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

Outcome dsq_values() {
    std::mt19937_64 rng(909);
    const Eigen::MatrixXd q = orthonormal(40, 12, rng);
    const double same = eval::dsq(q, q);
    const Eigen::MatrixXd full = orthonormal(40, 24, rng);
    const double orth = eval::dsq(full.leftCols(12), full.rightCols(12));
    std::normal_distribution<double> g;
    double asym = 0.0;
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd a(30, 7), b(30, 7);
        for (auto& v : a.reshaped()) v = g(rng);
        for (auto& v : b.reshaped()) v = g(rng);
        asym = std::max(asym, std::abs(eval::dsq(a, b) - eval::dsq(b, a)));
    }
    const double e1 = std::abs(same - std::sqrt(12.0));
    return {e1 <= 1e-12 && std::abs(orth) <= 1e-12 && asym <= 1e-12,
            fmt("|dsq(Q,Q) - sqrt 12| %.1e, orthogonal %.1e, asymmetry %.1e", e1, std::abs(orth), asym)};
}

// ---- 10 ---------------------------------------------------------------------

Outcome roc_values() {
    std::mt19937_64 rng(1010);
    std::uniform_int_distribution<int> coarse(0, 6);
    std::normal_distribution<double> g;
    double worst = 0.0, worst_p = 0.0;
    for (std::size_t n = 2; n <= 200; ++n)
        for (int rep = 0; rep < 3; ++rep) {
            std::vector<eval::ScoredTrial> ts;
            for (std::size_t i = 0; i < n; ++i) {
                const bool target = i == 0 || (i != 1 && (rng() & 1));
                const double s = rep == 0 ? static_cast<double>(coarse(rng)) : g(rng) + (target ? 0.7 : 0.0);
                ts.push_back({s, target});
            }
            double wins = 0.0, pairs = 0.0;
            for (const auto& t : ts)
                for (const auto& f : ts)
                    if (t.is_target && !f.is_target) {
                        pairs += 1;
                        wins += t.score > f.score ? 1.0 : t.score == f.score ? 0.5 : 0.0;
                    }
            const auto s = eval::roc_metrics(ts);
            worst = std::max(worst, std::abs(s.auc - wins / pairs));
            worst_p = std::max(worst_p, std::abs(eval::roc_metrics(ts, 1.0).pauc - s.auc));
        }
    const auto perfect = eval::roc_metrics({{0.9, true}, {0.7, true}, {0.4, false}, {0.1, false}, {0.0, false}});
    const bool ok = worst <= 1e-12 && worst_p <= 1e-12 && perfect.auc == 1.0 && perfect.aupr == 1.0;
    return {ok, fmt("max |auc - pairs| %.1e, max |pauc(1) - auc| %.1e, perfect ranker auc %.3g aupr %.3g", worst,
                    worst_p, perfect.auc, perfect.aupr)};
}

// ---- 11 ---------------------------------------------------------------------

Outcome trend_benchmark() {
    bench::BenchmarkConfig cfg;  // 5 watch-list, 10 generic, 5 replications
    const auto report = bench::run_benchmark(cfg, synth::procedural_head());
    std::size_t below = 0;
    std::string rows;
    for (const auto& r : report.replications) {
        if (r.augmented.mean_auc < r.baseline.mean_auc) ++below;
        rows += fmt(" %.3f/%.3f", r.baseline.mean_auc, r.augmented.mean_auc);
    }
    const double gain = report.mean_auc_augmented - report.mean_auc_baseline;
    return {below == 0 && gain > 0 && report.replications.size() == 5,
            fmt("baseline/augmented per replication:%s; mean gain %+.3f", rows.c_str(), gain)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;  // 0: no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "metric oracle equivalence", 5, metric_oracle},
        {2, "metric hand values", 0, hand_values},
        {3, "affinity propagation", 10, ap_properties},
        {4, "exemplar weight contract", 0, weight_contract},
        {5, "solver vs proximal gradient", 30, solver_oracle},
        {6, "exact-member recovery", 0, exact_member},
        {7, "SCI extremes and midpoint", 0, sci_values},
        {8, "synthesis contracts", 60, synthesis_contracts},
        {9, "DSQ reference values", 0, dsq_values},
        {10, "ROC / pAUC / AUPR", 0, roc_values},
        {11, "synthetic trend benchmark", 300, trend_benchmark},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs >= c.budget_s) {
            o.pass = false;
            o.detail += fmt(" [over the %.0f s budget]", c.budget_s);
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d  %-28s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
