#pragma once

#include "dsfs/image.hpp"

namespace dsfs::synth {

struct DecompositionConfig {
    double shading_sigma = 12.0;  // px, low-pass scale of the shading layer
    double texture_sigma = 2.0;   // px, split between base detail and texture
    double epsilon = 1e-4;        // intensity floor before taking logs
    bool normalize_material = true;  // scale M to peak 1, L absorbs the factor
};

/// Multiplicative layers: image = shading * material * texture, base = shading * material.
struct LayerDecomposition {
    GrayImage shading;
    GrayImage material;
    GrayImage texture;
    GrayImage base;

    GrayImage reconstruct() const;
};

/// Separable Gaussian blur with mirror (reflect-101) borders.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Log-domain two-scale split. Shading is exp(G_s * log(max(img, eps))); the
/// texture is the high-frequency residual of a second split at the texture
/// scale, normalised to unit mean; material = img / (shading * texture).
LayerDecomposition decompose(const GrayImage& img, const DecompositionConfig& cfg = {});

}  // namespace dsfs::synth
