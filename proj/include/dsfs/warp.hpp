#pragma once

#include <cstddef>
#include <vector>

#include "dsfs/delaunay.hpp"
#include "dsfs/image.hpp"

namespace dsfs::synth {

/// Maps every destination pixel inside a destination triangle back to the
/// source triangle through its barycentric coordinates and samples `src`
/// bilinearly. Pixels outside all triangles keep the source pixel at the same
/// location (0 where the source is smaller). Degenerate triangles are skipped.
GrayImage piecewise_affine_warp(const GrayImage& src, const Landmarks& src_lms, const Landmarks& dst_lms,
                                const std::vector<TriangleIndices>& triangles, std::size_t width,
                                std::size_t height);

struct TransferConfig {
    /// Blend toward neutral shading: warped^1 at 1.0, unit shading at 0.0.
    double dissolve = 1.0;
    /// Add the four image corners and edge midpoints to both landmark sets so
    /// the triangulation covers the whole frame.
    bool anchor_borders = true;
    double max_value = 1.0;
};

/// Warps the lighting (shading) layer from its landmark frame onto the
/// rendered image's landmark frame and multiplies it into the render:
/// out = rendered * ((1 - dissolve) + dissolve * warped_shading), clamped to
/// [0, max_value].
GrayImage transfer_illumination(const GrayImage& lighting_layer, const Landmarks& lighting_lms,
                                const GrayImage& rendered, const Landmarks& rendered_lms,
                                const TransferConfig& cfg = {});

}  // namespace dsfs::synth
