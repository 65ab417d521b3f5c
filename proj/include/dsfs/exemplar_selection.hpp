#pragma once

#include <cstddef>
#include <vector>

#include "dsfs/affinity_propagation.hpp"
#include "dsfs/capture_metrics.hpp"
#include "dsfs/image.hpp"

namespace dsfs::cluster {

enum class SpaceScaling {
    none,      // raw degrees / raw (l, c)
    joint,     // one common scale per space (largest axis range)
    per_axis,  // min-max each axis to [0, 1]
};

struct SelectionConfig {
    metrics::MetricConfig metrics;
    ApConfig ap;
    SpaceScaling scaling = SpaceScaling::joint;
};

struct Exemplar {
    std::size_t roi_index = 0;        // lighting exemplar, an actual generic ROI
    std::size_t pose_roi_index = 0;   // exemplar of its pose cluster
    PoseAngles pose;                  // pose of the pose exemplar; used for rendering
    metrics::ConditionVector condition;  // of the lighting exemplar
    std::size_t cluster_size = 0;     // n_ij
};

struct ExemplarSet {
    std::vector<Exemplar> exemplars;
    std::vector<double> weights;               // n_ij / n
    std::vector<std::size_t> pose_cluster_of;  // per exemplar
    std::vector<std::size_t> pose_cluster_of_roi;  // per generic ROI
    std::size_t pose_cluster_count = 0;
    std::size_t generic_count = 0;
    bool converged = true;

    std::size_t size() const noexcept { return exemplars.size(); }
};

/// w_ij = n_ij / n. Throws when sizes do not sum to n or n == 0.
std::vector<double> exemplar_weights(const std::vector<std::size_t>& cluster_sizes, std::size_t n);

/// Two-step selection from precomputed condition vectors: pose clustering over
/// all samples, then (l, c) clustering inside each pose cluster.
ExemplarSet two_step_select(const std::vector<metrics::ConditionVector>& conditions,
                            const SelectionConfig& cfg = {});

/// Measures every generic ROI against `reference`, then selects.
ExemplarSet two_step_select(const std::vector<RoiRecord>& generic, const GrayImage& reference,
                            const SelectionConfig& cfg = {});

}  // namespace dsfs::cluster
