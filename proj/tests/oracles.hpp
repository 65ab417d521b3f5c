#pragma once
// Independent reference implementations used only by tests. Each one follows
// the textbook definition directly and shares no code with the library path
// it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "dsfs/image.hpp"

namespace oracle {

// Direct double loop over every window, two-pass mean and variance.
inline double windowed_similarity(const dsfs::GrayImage& r, const dsfs::GrayImage& g, std::size_t window,
                                  std::size_t stride, double k, double range, bool use_stddev) {
    const double c = (k * range) * (k * range);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t y0 = 0; y0 + window <= r.height(); y0 += stride) {
        for (std::size_t x0 = 0; x0 + window <= r.width(); x0 += stride) {
            double mr = 0.0, mg = 0.0;
            for (std::size_t y = y0; y < y0 + window; ++y)
                for (std::size_t x = x0; x < x0 + window; ++x) {
                    mr += r.at(x, y);
                    mg += g.at(x, y);
                }
            const double area = static_cast<double>(window * window);
            mr /= area;
            mg /= area;
            double a = mr, b = mg;
            if (use_stddev) {
                double vr = 0.0, vg = 0.0;
                for (std::size_t y = y0; y < y0 + window; ++y)
                    for (std::size_t x = x0; x < x0 + window; ++x) {
                        vr += (r.at(x, y) - mr) * (r.at(x, y) - mr);
                        vg += (g.at(x, y) - mg) * (g.at(x, y) - mg);
                    }
                a = std::sqrt(vr / area);
                b = std::sqrt(vg / area);
            }
            total += (2.0 * a * b + c) / (a * a + b * b + c);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

inline dsfs::GrayImage random_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    dsfs::GrayImage img(w, h);
    for (double& v : img.data()) v = u(rng);
    return img;
}

inline dsfs::GrayImage random_image(std::size_t w, std::size_t h, unsigned seed) {
    std::mt19937_64 rng(seed);
    return random_image(w, h, rng);
}

struct ApOutcome {
    std::vector<std::size_t> exemplars;
    std::vector<std::size_t> assignment;
};

// Frey & Dueck message passing in its original elementwise form: damping 0.5,
// fixed iteration count, exemplars where a(k,k) + r(k,k) > 0, members
// assigned to the most similar exemplar. Degeneracies are removed the way the
// original authors recommend, with a small uniform perturbation of the
// similarities; `nudge` raises the preference by a relative amount.
inline ApOutcome reference_ap(std::vector<std::vector<double>> s, double preference, std::size_t iterations = 4000,
                              double nudge = 1e-9, unsigned seed = 1234) {
    const std::size_t n = s.size();
    const std::vector<std::vector<double>> clean = s;
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) s[k][k] = preference + nudge * std::abs(preference);
    for (auto& row : s)
        for (double& v : row) v += 1e-11 * (std::abs(v) + 1.0) * u(gen);
    std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0)), a = r;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                double m = -std::numeric_limits<double>::infinity();
                for (std::size_t kk = 0; kk < n; ++kk)
                    if (kk != k) m = std::max(m, a[i][kk] + s[i][kk]);
                r[i][k] = 0.5 * r[i][k] + 0.5 * (s[i][k] - m);
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                double acc = 0.0;
                for (std::size_t ii = 0; ii < n; ++ii)
                    if (ii != i && ii != k) acc += std::max(0.0, r[ii][k]);
                const double v = i == k ? acc : std::min(0.0, r[k][k] + acc);
                a[i][k] = 0.5 * a[i][k] + 0.5 * v;
            }
    }
    ApOutcome out;
    for (std::size_t k = 0; k < n; ++k)
        if (a[k][k] + r[k][k] > 0.0) out.exemplars.push_back(k);
    out.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::find(out.exemplars.begin(), out.exemplars.end(), i) != out.exemplars.end()) {
            out.assignment[i] = i;
            continue;
        }
        std::size_t best = out.exemplars.empty() ? 0 : out.exemplars.front();
        for (std::size_t e : out.exemplars)
            if (clean[i][e] > clean[i][best]) best = e;
        out.assignment[i] = best;
    }
    return out;
}

// Partition of sample indices induced by an assignment vector, canonicalised
// as sorted lists sorted by first member.
inline std::vector<std::vector<std::size_t>> partition(const std::vector<std::size_t>& assignment) {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> label;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        auto it = std::find(label.begin(), label.end(), assignment[i]);
        if (it == label.end()) {
            label.push_back(assignment[i]);
            groups.push_back({i});
        } else {
            groups[static_cast<std::size_t>(it - label.begin())].push_back(i);
        }
    }
    std::sort(groups.begin(), groups.end());
    return groups;
}

// Exhaustive k-medoids: every k-subset as medoids, members to nearest medoid.
inline std::vector<std::size_t> exhaustive_k_medoids(const std::vector<std::vector<double>>& pts, std::size_t k) {
    const std::size_t n = pts.size();
    auto d2 = [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < pts[i].size(); ++c) acc += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
        return acc;
    };
    std::vector<std::size_t> best_assign;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(k);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == k) {
            double cost = 0.0;
            std::vector<std::size_t> assign(n);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t b = idx[0];
                for (std::size_t m : idx)
                    if (d2(i, m) < d2(i, b)) b = m;
                assign[i] = b;
                cost += d2(i, b);
            }
            if (cost < best_cost) {
                best_cost = cost;
                best_assign = assign;
            }
            return;
        }
        for (std::size_t m = start; m < n; ++m) {
            idx[depth] = m;
            rec(m + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best_assign;
}

// prox of kappa * ||diag(w) v||_2 evaluated in the original coordinates:
// x_k = a_k mu / (mu + kappa w_k^2) with mu = ||W x|| found by bisection.
inline Eigen::VectorXd weighted_group_prox(const Eigen::VectorXd& a, const Eigen::VectorXd& w, double kappa) {
    if (a.cwiseQuotient(w).norm() <= kappa) return Eigen::VectorXd::Zero(a.size());
    auto g = [&](double mu) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < a.size(); ++k) {
            const double t = w(k) * a(k) / (mu + kappa * w(k) * w(k));
            acc += t * t;
        }
        return std::sqrt(acc);
    };
    double lo = 0.0, hi = a.cwiseProduct(w).norm();
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 1.0 ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    Eigen::VectorXd x(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) x(k) = a(k) * mu / (mu + kappa * w(k) * w(k));
    return x;
}

inline double weighted_group_objective(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& w, Eigen::Index block, double lambda) {
    double pen = 0.0;
    for (Eigen::Index b = 0; b < x.size(); b += block)
        pen += x.segment(b, block).cwiseProduct(w.segment(b, block)).norm();
    return 0.5 * (y - d * x).squaredNorm() + lambda * pen;
}

// Accelerated proximal gradient with adaptive restart, in x coordinates.
inline Eigen::VectorXd prox_gradient(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                     Eigen::Index block, double lambda, double tol = 1e-10,
                                     std::size_t max_iter = 2000000) {
    const double lip = std::pow(Eigen::JacobiSVD<Eigen::MatrixXd>(d).singularValues()(0), 2);
    const double step = 1.0 / lip;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d.cols()), v = x, prev = x;
    double t = 1.0;
    double f_prev = weighted_group_objective(d, y, x, w, block, lambda);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad_point = v - step * d.transpose() * (d * v - y);
        Eigen::VectorXd next(x.size());
        for (Eigen::Index b = 0; b < x.size(); b += block)
            next.segment(b, block) =
                weighted_group_prox(grad_point.segment(b, block), w.segment(b, block), step * lambda);
        const double f = weighted_group_objective(d, y, next, w, block, lambda);
        if (f > f_prev) {
            if (t == 1.0) break;  // even a plain step cannot descend: round-off floor
            t = 1.0;              // restart momentum
            v = x;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        v = next + ((t - 1.0) / t_next) * (next - x);
        prev = x;
        x = next;
        t = t_next;
        const double change = (x - prev).norm();
        f_prev = f;
        if (change < tol * std::max(1.0, x.norm())) break;
    }
    return x;
}

}  // namespace oracle
