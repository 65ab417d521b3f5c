#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dsfs/capture_metrics.hpp"
#include "dsfs/image.hpp"

namespace dsfs::cluster {

/// Dense n x n similarity matrix, row-major. Off-diagonal entries are negated
/// squared distances; the diagonal holds preferences once assigned.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    explicit SimilarityMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}
    SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t k) const { return values_[i * n_ + k]; }
    double& operator()(std::size_t i, std::size_t k) { return values_[i * n_ + k]; }

    /// Median of off-diagonal entries; 0 when n < 2.
    double median_off_diagonal() const;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// Negated squared Euclidean distances between points of equal dimension.
SimilarityMatrix negative_squared_distances(const std::vector<std::vector<double>>& points);

SimilarityMatrix pose_similarities(const std::vector<PoseAngles>& poses);
SimilarityMatrix lighting_similarities(const std::vector<metrics::ConditionVector>& conditions);

/// Responsibility and availability messages, n x n row-major.
struct ApState {
    std::size_t n = 0;
    std::vector<double> responsibility;
    std::vector<double> availability;
    std::size_t iteration = 0;

    double r(std::size_t i, std::size_t k) const { return responsibility[i * n + k]; }
    double a(std::size_t i, std::size_t k) const { return availability[i * n + k]; }
};

enum class PreferenceRule { median, minimum };

struct ApConfig {
    PreferenceRule preference_rule = PreferenceRule::median;
    std::optional<double> preference;  // overrides the rule when set
    double damping = 0.9;
    std::size_t max_iter = 1000;
    std::size_t stable_window = 50;
    // Relative scale of the deterministic perturbation that breaks symmetric
    // degeneracies (e.g. two mutually closest points).
    double noise = 1e-12;
    // Relative preference increase so that configurations tied in net
    // similarity resolve toward more exemplars.
    double tie_nudge = 1e-9;
    std::uint64_t seed = 0;
};

struct ClusterResult {
    std::vector<std::size_t> exemplar_indices;  // ascending
    std::vector<std::size_t> assignment;        // exemplar index per sample
    std::size_t iterations_run = 0;
    bool converged = false;
    ApState state;

    std::size_t cluster_count() const noexcept { return exemplar_indices.size(); }
    std::vector<std::size_t> members_of(std::size_t exemplar) const;
};

/// Affinity propagation with damped responsibility/availability updates.
/// The diagonal of `s` is overwritten by the preference (a scalar from `cfg`
/// or `per_point` when non-empty). Exemplars are the samples whose own
/// argmax_k a(i,k) + r(i,k) is themselves; ties resolve to the lowest index.
/// Samples follow their argmax when it is an exemplar, otherwise the most
/// similar exemplar. When every off-diagonal similarity is equal and no
/// preference exceeds it, the result is the single exemplar 0.
ClusterResult ap_cluster(SimilarityMatrix s, const ApConfig& cfg = {},
                         const std::vector<double>& per_point = {});

/// Net similarity of a clustering: sum_i s(i, assignment(i)) over
/// non-exemplars plus the preference of every exemplar.
double net_similarity(const SimilarityMatrix& s, const std::vector<std::size_t>& assignment,
                      double preference);

}  // namespace dsfs::cluster
