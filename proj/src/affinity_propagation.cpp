#include "dsfs/affinity_propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dsfs/error.hpp"

namespace dsfs::cluster {

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : n_(rows), values_(std::move(values)) {
    if (rows != cols) throw DataError("similarity matrix must be square");
    if (values_.size() != rows * cols) throw DataError("similarity matrix data length mismatch");
}

double SimilarityMatrix::median_off_diagonal() const {
    if (n_ < 2) return 0.0;
    std::vector<double> off;
    off.reserve(n_ * (n_ - 1));
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = 0; k < n_; ++k)
            if (i != k) off.push_back((*this)(i, k));
    std::sort(off.begin(), off.end());
    const std::size_t m = off.size();
    return m % 2 == 1 ? off[m / 2] : 0.5 * (off[m / 2 - 1] + off[m / 2]);
}

SimilarityMatrix negative_squared_distances(const std::vector<std::vector<double>>& points) {
    if (points.empty()) throw DataError("similarity over an empty point set");
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();
    SimilarityMatrix s(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (points[i].size() != dim) throw DataError("points of unequal dimension");
        for (std::size_t k = i + 1; k < n; ++k) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = points[i][c] - points[k][c];
                d2 += d * d;
            }
            s(i, k) = -d2;
            s(k, i) = -d2;
        }
    }
    return s;
}

SimilarityMatrix pose_similarities(const std::vector<PoseAngles>& poses) {
    std::vector<std::vector<double>> pts;
    pts.reserve(poses.size());
    for (const auto& p : poses) pts.push_back({p.pitch, p.yaw, p.roll});
    return negative_squared_distances(pts);
}

SimilarityMatrix lighting_similarities(const std::vector<metrics::ConditionVector>& conditions) {
    std::vector<std::vector<double>> pts;
    pts.reserve(conditions.size());
    for (const auto& c : conditions) pts.push_back({c.luminance, c.contrast});
    return negative_squared_distances(pts);
}

std::vector<std::size_t> ClusterResult::members_of(std::size_t exemplar) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == exemplar) out.push_back(i);
    return out;
}

namespace {

std::vector<std::size_t> decisions(const ApState& st) {
    std::vector<std::size_t> dec(st.n);
    for (std::size_t i = 0; i < st.n; ++i) {
        std::size_t best = 0;
        double best_v = st.a(i, 0) + st.r(i, 0);
        for (std::size_t k = 1; k < st.n; ++k) {
            const double v = st.a(i, k) + st.r(i, k);
            if (v > best_v) {
                best_v = v;
                best = k;
            }
        }
        dec[i] = best;
    }
    return dec;
}

}  // namespace

ClusterResult ap_cluster(SimilarityMatrix s, const ApConfig& cfg, const std::vector<double>& per_point) {
    const std::size_t n = s.size();
    if (n == 0) throw DataError("ap_cluster: empty similarity matrix");
    if (!(cfg.damping >= 0.5 && cfg.damping < 1.0)) throw ConfigError("ap_cluster: damping must lie in [0.5, 1)");
    if (!per_point.empty() && per_point.size() != n) throw DataError("ap_cluster: preference length mismatch");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            if (i != k && !std::isfinite(s(i, k))) throw DataError("ap_cluster: non-finite similarity");

    const double pref = cfg.preference ? *cfg.preference
                        : cfg.preference_rule == PreferenceRule::median ? s.median_off_diagonal()
                        : [&] {
                              double m = 0.0;
                              for (std::size_t i = 0; i < n; ++i)
                                  for (std::size_t k = 0; k < n; ++k)
                                      if (i != k) m = std::min(m, s(i, k));
                              return m;
                          }();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, typical = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            if (i != k) {
                lo = std::min(lo, s(i, k));
                hi = std::max(hi, s(i, k));
                typical += std::abs(s(i, k));
            }
    for (std::size_t k = 0; k < n; ++k) s(k, k) = per_point.empty() ? pref : per_point[k];

    ClusterResult out;
    ApState& st = out.state;
    st.n = n;
    st.responsibility.assign(n * n, 0.0);
    st.availability.assign(n * n, 0.0);

    const bool flat = n > 1 && lo == hi && [&] {
        for (std::size_t k = 0; k < n; ++k)
            if (s(k, k) > hi) return false;
        return true;
    }();
    if (n == 1 || flat) {
        out.exemplar_indices = {0};
        out.assignment.assign(n, 0);
        out.converged = true;
        return out;
    }

    // Work on a perturbed copy; `s` keeps the caller's similarities for the
    // final assignment step.
    SimilarityMatrix w = s;
    typical /= static_cast<double>(n * (n - 1));
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) w(k, k) += cfg.tie_nudge * std::abs(w(k, k));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) w(i, k) += cfg.noise * (std::abs(w(i, k)) + typical) * gauss(rng);

    const double lam = cfg.damping;
    std::vector<std::size_t> last = decisions(st);
    std::size_t stable = 0;
    std::vector<double> col_pos(n);
    for (std::size_t it = 0; it < cfg.max_iter; ++it) {
        // responsibilities
        for (std::size_t i = 0; i < n; ++i) {
            double max1 = -std::numeric_limits<double>::infinity(), max2 = max1;
            std::size_t arg1 = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double v = st.availability[i * n + k] + w(i, k);
                if (v > max1) {
                    max2 = max1;
                    max1 = v;
                    arg1 = k;
                } else if (v > max2) {
                    max2 = v;
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                const double computed = w(i, k) - (k == arg1 ? max2 : max1);
                double& r = st.responsibility[i * n + k];
                r = lam * r + (1.0 - lam) * computed;
            }
        }
        // availabilities
        for (std::size_t k = 0; k < n; ++k) {
            double sum_pos = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (i != k) sum_pos += std::max(0.0, st.responsibility[i * n + k]);
            const double rkk = st.responsibility[k * n + k];
            for (std::size_t i = 0; i < n; ++i) {
                const double computed =
                    i == k ? sum_pos : std::min(0.0, rkk + sum_pos - std::max(0.0, st.responsibility[i * n + k]));
                double& a = st.availability[i * n + k];
                a = lam * a + (1.0 - lam) * computed;
            }
        }
        st.iteration = it + 1;

        auto dec = decisions(st);
        // Consistent: at least one exemplar, and every sample's choice is one.
        const bool consistent = [&] {
            bool any = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (dec[dec[i]] != dec[i]) return false;
                any = any || dec[i] == i;
            }
            return any;
        }();
        stable = (dec == last && consistent) ? stable + 1 : 0;
        last = std::move(dec);
        if (stable >= cfg.stable_window) {
            out.converged = true;
            break;
        }
    }
    out.iterations_run = st.iteration;

    for (std::size_t i = 0; i < n; ++i)
        if (last[i] == i) out.exemplar_indices.push_back(i);
    if (out.exemplar_indices.empty()) {
        // No self-selected sample: fall back to the strongest self-evidence.
        std::size_t best = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (st.a(k, k) + st.r(k, k) > st.a(best, best) + st.r(best, best)) best = k;
        out.exemplar_indices = {best};
        out.converged = false;
    }

    out.assignment.resize(n);
    std::vector<bool> is_exemplar(n, false);
    for (std::size_t e : out.exemplar_indices) is_exemplar[e] = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_exemplar[i]) {
            out.assignment[i] = i;
        } else if (is_exemplar[last[i]]) {
            out.assignment[i] = last[i];
        } else {
            std::size_t best = out.exemplar_indices.front();
            for (std::size_t e : out.exemplar_indices)
                if (s(i, e) > s(i, best)) best = e;
            out.assignment[i] = best;
        }
    }
    return out;
}

double net_similarity(const SimilarityMatrix& s, const std::vector<std::size_t>& assignment, double preference) {
    double total = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        total += assignment[i] == i ? preference : s(i, assignment[i]);
    return total;
}

}  // namespace dsfs::cluster
