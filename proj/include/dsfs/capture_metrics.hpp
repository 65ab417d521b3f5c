#pragma once

#include <cstddef>

#include "dsfs/image.hpp"

namespace dsfs::metrics {

struct MetricConfig {
    std::size_t window = 8;  // B
    std::size_t stride = 1;
    double k_l = 0.01;
    double k_c = 0.03;
    double dynamic_range = 1.0;  // L
};

/// Capture condition of one ROI: its pose plus luminance/contrast similarity
/// to the reference still.
struct ConditionVector {
    PoseAngles pose;
    double luminance = 1.0;
    double contrast = 1.0;
};

/// Global luminance similarity: mean over all B x B windows (no padding) of
/// (2 mu_r mu_g + C) / (mu_r^2 + mu_g^2 + C), C = (k_l L)^2. Symmetric, in (0, 1].
double glq(const GrayImage& r, const GrayImage& g, const MetricConfig& cfg = {});

/// Global contrast similarity, as glq with window standard deviations and k_c.
double gcq(const GrayImage& r, const GrayImage& g, const MetricConfig& cfg = {});

/// Pose is passed through; the ROI is bilinearly resampled to the reference
/// size first when the shapes differ.
ConditionVector condition_vector(const RoiRecord& roi, const GrayImage& reference, const MetricConfig& cfg = {});

}  // namespace dsfs::metrics
