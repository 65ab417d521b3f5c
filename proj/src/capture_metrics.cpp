#include "dsfs/capture_metrics.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "dsfs/error.hpp"

namespace dsfs::metrics {

namespace {

void validate(const GrayImage& r, const GrayImage& g, const MetricConfig& cfg) {
    if (r.empty() || g.empty()) throw DataError("capture metric on an empty image");
    if (!r.same_shape(g)) {
        throw DataError("capture metric: dimension mismatch " + std::to_string(r.width()) + "x" +
                        std::to_string(r.height()) + " vs " + std::to_string(g.width()) + "x" +
                        std::to_string(g.height()));
    }
    if (cfg.window == 0 || cfg.window > std::min(r.width(), r.height()))
        throw DataError("capture metric: window larger than image");
    if (cfg.stride == 0) throw ConfigError("capture metric: stride must be positive");
    if (!(cfg.dynamic_range > 0.0)) throw ConfigError("capture metric: dynamic range must be positive");
}

// Summed-area tables over mean-centred intensities; centring keeps the
// E[x^2] - E[x]^2 cancellation small for the variance.
class WindowStats {
public:
    WindowStats(const GrayImage& img, std::size_t window) : w_(img.width() + 1), window_(window) {
        const auto n = static_cast<double>(img.size());
        offset_ = std::accumulate(img.data().begin(), img.data().end(), 0.0) / n;
        sum_.assign(w_ * (img.height() + 1), 0.0);
        sq_.assign(sum_.size(), 0.0);
        for (std::size_t y = 0; y < img.height(); ++y) {
            double row = 0.0, row_sq = 0.0;
            for (std::size_t x = 0; x < img.width(); ++x) {
                const double v = img.at(x, y) - offset_;
                row += v;
                row_sq += v * v;
                sum_[(y + 1) * w_ + x + 1] = sum_[y * w_ + x + 1] + row;
                sq_[(y + 1) * w_ + x + 1] = sq_[y * w_ + x + 1] + row_sq;
            }
        }
    }

    double mean(std::size_t x, std::size_t y) const { return box(sum_, x, y) / area() + offset_; }

    double stddev(std::size_t x, std::size_t y) const {
        const double m = box(sum_, x, y) / area();
        const double var = box(sq_, x, y) / area() - m * m;
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }

private:
    double area() const { return static_cast<double>(window_ * window_); }

    double box(const std::vector<double>& t, std::size_t x, std::size_t y) const {
        const std::size_t x1 = x + window_, y1 = y + window_;
        return t[y1 * w_ + x1] - t[y * w_ + x1] - t[y1 * w_ + x] + t[y * w_ + x];
    }

    std::size_t w_;
    std::size_t window_;
    double offset_ = 0.0;
    std::vector<double> sum_;
    std::vector<double> sq_;
};

template <typename Stat>
double windowed_similarity(const GrayImage& r, const GrayImage& g, const MetricConfig& cfg, double k, Stat stat) {
    validate(r, g, cfg);
    const double c = (k * cfg.dynamic_range) * (k * cfg.dynamic_range);
    const WindowStats sr(r, cfg.window), sg(g, cfg.window);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t y = 0; y + cfg.window <= r.height(); y += cfg.stride) {
        for (std::size_t x = 0; x + cfg.window <= r.width(); x += cfg.stride) {
            const double a = stat(sr, x, y);
            const double b = stat(sg, x, y);
            total += (2.0 * a * b + c) / (a * a + b * b + c);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

}  // namespace

double glq(const GrayImage& r, const GrayImage& g, const MetricConfig& cfg) {
    return windowed_similarity(r, g, cfg, cfg.k_l,
                               [](const WindowStats& s, std::size_t x, std::size_t y) { return s.mean(x, y); });
}

double gcq(const GrayImage& r, const GrayImage& g, const MetricConfig& cfg) {
    return windowed_similarity(r, g, cfg, cfg.k_c,
                               [](const WindowStats& s, std::size_t x, std::size_t y) { return s.stddev(x, y); });
}

ConditionVector condition_vector(const RoiRecord& roi, const GrayImage& reference, const MetricConfig& cfg) {
    if (roi.image.same_shape(reference))
        return {roi.pose, glq(reference, roi.image, cfg), gcq(reference, roi.image, cfg)};
    const GrayImage probe = resample(roi.image, reference.width(), reference.height());
    return {roi.pose, glq(reference, probe, cfg), gcq(reference, probe, cfg)};
}

}  // namespace dsfs::metrics
