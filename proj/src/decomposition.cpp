#include "dsfs/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dsfs/error.hpp"

namespace dsfs::synth {

namespace {

// Mirror index without repeating the edge sample; periodic for any offset.
std::size_t reflect101(long i, long n) {
    if (n == 1) return 0;
    const long period = 2 * (n - 1);
    long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < n ? m : period - m);
}

std::vector<double> gaussian_kernel(double sigma) {
    const long radius = std::max(1L, static_cast<long>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    for (long i = -radius; i <= radius; ++i)
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    const double sum = std::accumulate(k.begin(), k.end(), 0.0);
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const auto kernel = gaussian_kernel(sigma);
    const long radius = static_cast<long>(kernel.size() / 2);
    const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
    GrayImage tmp(img.width(), img.height()), out(img.width(), img.height());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long j = -radius; j <= radius; ++j)
                acc += kernel[static_cast<std::size_t>(j + radius)] * img.at(reflect101(x + j, w), static_cast<std::size_t>(y));
            tmp.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long j = -radius; j <= radius; ++j)
                acc += kernel[static_cast<std::size_t>(j + radius)] * tmp.at(static_cast<std::size_t>(x), reflect101(y + j, h));
            out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    return out;
}

GrayImage LayerDecomposition::reconstruct() const {
    GrayImage out = shading;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= material.data()[i] * texture.data()[i];
    return out;
}

LayerDecomposition decompose(const GrayImage& img, const DecompositionConfig& cfg) {
    if (img.empty()) throw DataError("decompose: empty image");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("decompose: epsilon must be positive");
    const bool all_zero = std::all_of(img.data().begin(), img.data().end(), [](double v) { return v <= 0.0; });
    if (all_zero) throw DataError("decompose: degenerate all-zero image");

    GrayImage log_img(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) log_img.data()[i] = std::log(std::max(img.data()[i], cfg.epsilon));

    const GrayImage log_shading = gaussian_blur(log_img, cfg.shading_sigma);
    GrayImage log_residual = log_img;
    for (std::size_t i = 0; i < img.size(); ++i) log_residual.data()[i] -= log_shading.data()[i];
    const GrayImage log_detail = gaussian_blur(log_residual, cfg.texture_sigma);

    LayerDecomposition d;
    d.shading = GrayImage(img.width(), img.height());
    d.texture = GrayImage(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        d.shading.data()[i] = std::exp(log_shading.data()[i]);
        d.texture.data()[i] = std::exp(log_residual.data()[i] - log_detail.data()[i]);
    }
    const double mean_t =
        std::accumulate(d.texture.data().begin(), d.texture.data().end(), 0.0) / static_cast<double>(img.size());
    for (double& t : d.texture.data()) t /= mean_t;

    d.material = GrayImage(img.width(), img.height());
    d.base = GrayImage(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        d.material.data()[i] = img.data()[i] / (d.shading.data()[i] * d.texture.data()[i]);
    // L and M are only defined up to a common scale; put it in the shading so
    // the material reads as a reflectance with peak 1.
    if (cfg.normalize_material) {
        const double peak = *std::max_element(d.material.data().begin(), d.material.data().end());
        if (peak > 0.0) {
            for (double& m : d.material.data()) m /= peak;
            for (double& l : d.shading.data()) l *= peak;
        }
    }
    for (std::size_t i = 0; i < img.size(); ++i) d.base.data()[i] = d.shading.data()[i] * d.material.data()[i];
    return d;
}

}  // namespace dsfs::synth
