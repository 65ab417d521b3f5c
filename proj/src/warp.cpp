#include "dsfs/warp.hpp"

#include <algorithm>
#include <cmath>

#include "dsfs/error.hpp"

namespace dsfs::synth {

GrayImage piecewise_affine_warp(const GrayImage& src, const Landmarks& src_lms, const Landmarks& dst_lms,
                                const std::vector<TriangleIndices>& triangles, std::size_t width,
                                std::size_t height) {
    if (src_lms.size() != dst_lms.size()) throw DataError("piecewise_affine_warp: landmark count mismatch");
    if (src.empty()) throw DataError("piecewise_affine_warp: empty source");

    GrayImage out(width, height);
    std::vector<bool> done(width * height, false);
    for (const auto& t : triangles) {
        for (std::size_t v : t)
            if (v >= dst_lms.size()) throw DataError("piecewise_affine_warp: triangle index out of range");
        const Point2 &a = dst_lms[t[0]], &b = dst_lms[t[1]], &c = dst_lms[t[2]];
        const double area = orientation(a, b, c);
        if (std::abs(area) < 1e-12) continue;
        const Point2 &sa = src_lms[t[0]], &sb = src_lms[t[1]], &sc = src_lms[t[2]];

        const long x0 = std::max(0L, static_cast<long>(std::ceil(std::min({a.x, b.x, c.x}) - 1e-9)));
        const long y0 = std::max(0L, static_cast<long>(std::ceil(std::min({a.y, b.y, c.y}) - 1e-9)));
        const long x1 = std::min(static_cast<long>(width) - 1, static_cast<long>(std::floor(std::max({a.x, b.x, c.x}) + 1e-9)));
        const long y1 = std::min(static_cast<long>(height) - 1, static_cast<long>(std::floor(std::max({a.y, b.y, c.y}) + 1e-9)));
        for (long y = y0; y <= y1; ++y) {
            for (long x = x0; x <= x1; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x);
                if (done[idx]) continue;
                const Point2 p{static_cast<double>(x), static_cast<double>(y)};
                const double l0 = orientation(b, c, p) / area;
                const double l1 = orientation(c, a, p) / area;
                const double l2 = 1.0 - l0 - l1;
                if (l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9) continue;
                const double sx = l0 * sa.x + l1 * sb.x + l2 * sc.x;
                const double sy = l0 * sa.y + l1 * sb.y + l2 * sc.y;
                out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = sample_bilinear(src, sx, sy);
                done[idx] = true;
            }
        }
    }
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            if (!done[y * width + x] && x < src.width() && y < src.height()) out.at(x, y) = src.at(x, y);
    return out;
}

namespace {

Landmarks with_border_anchors(Landmarks lms, const GrayImage& img) {
    const double w = static_cast<double>(img.width()) - 1.0;
    const double h = static_cast<double>(img.height()) - 1.0;
    for (const Point2& p : {Point2{0, 0}, Point2{w / 2, 0}, Point2{w, 0}, Point2{w, h / 2}, Point2{w, h},
                            Point2{w / 2, h}, Point2{0, h}, Point2{0, h / 2}})
        lms.push_back(p);
    return lms;
}

}  // namespace

GrayImage transfer_illumination(const GrayImage& lighting_layer, const Landmarks& lighting_lms,
                                const GrayImage& rendered, const Landmarks& rendered_lms,
                                const TransferConfig& cfg) {
    if (lighting_lms.empty() || rendered_lms.empty()) throw DataError("transfer_illumination: missing landmarks");
    if (lighting_lms.size() != rendered_lms.size())
        throw DataError("transfer_illumination: landmark count mismatch");
    const Landmarks src = cfg.anchor_borders ? with_border_anchors(lighting_lms, lighting_layer) : lighting_lms;
    const Landmarks dst = cfg.anchor_borders ? with_border_anchors(rendered_lms, rendered) : rendered_lms;
    const auto tris = delaunay(dst);
    const GrayImage warped = piecewise_affine_warp(lighting_layer, src, dst, tris, rendered.width(), rendered.height());

    GrayImage out = rendered;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double shading = (1.0 - cfg.dissolve) + cfg.dissolve * warped.data()[i];
        out.data()[i] = std::clamp(rendered.data()[i] * shading, 0.0, cfg.max_value);
    }
    return out;
}

}  // namespace dsfs::synth
