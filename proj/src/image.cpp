#include "dsfs/image.hpp"

#include <algorithm>
#include <cmath>

#include "dsfs/error.hpp"

namespace dsfs {

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) {
        throw DataError("image data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(width_) + "x" +
                        std::to_string(height_));
    }
}

std::string to_string(Domain d) {
    return d == Domain::enrollment ? "enrollment" : "operational";
}

Domain parse_domain(const std::string& s) {
    if (s == "enrollment" || s == "ed") return Domain::enrollment;
    if (s == "operational" || s == "od") return Domain::operational;
    throw DataError("unknown domain tag '" + s + "'");
}

namespace {

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

double sample_bilinear(const GrayImage& img, double x, double y) {
    const auto w = static_cast<double>(img.width());
    const auto h = static_cast<double>(img.height());
    x = std::clamp(snap(x), 0.0, w - 1.0);
    y = std::clamp(snap(y), 0.0, h - 1.0);
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    if (fx == 0.0 && fy == 0.0) return img.at(x0, y0);
    const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
    const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
    return (1.0 - fy) * top + fy * bottom;
}

GrayImage resample(const GrayImage& img, std::size_t width, std::size_t height) {
    if (img.empty()) throw DataError("cannot resample an empty image");
    if (img.width() == width && img.height() == height) return img;
    GrayImage out(width, height);
    const double sx = width > 1 ? static_cast<double>(img.width() - 1) / static_cast<double>(width - 1) : 0.0;
    const double sy = height > 1 ? static_cast<double>(img.height() - 1) / static_cast<double>(height - 1) : 0.0;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            out.at(x, y) = sample_bilinear(img, static_cast<double>(x) * sx, static_cast<double>(y) * sy);
    return out;
}

GrayImage clamp(GrayImage img, double lo, double hi) {
    for (double& v : img.data()) v = std::clamp(v, lo, hi);
    return img;
}

void check_landmarks(const GrayImage& img, const Landmarks& lms) {
    const auto w = static_cast<double>(img.width());
    const auto h = static_cast<double>(img.height());
    for (const auto& p : lms) {
        if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0)) {
            throw DataError("landmark (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") outside image bounds");
        }
    }
}

std::vector<double> vectorize_column_major(const GrayImage& img) {
    std::vector<double> v;
    v.reserve(img.size());
    for (std::size_t x = 0; x < img.width(); ++x)
        for (std::size_t y = 0; y < img.height(); ++y) v.push_back(img.at(x, y));
    return v;
}

double rms_difference(const GrayImage& a, const GrayImage& b) {
    if (!a.same_shape(b)) throw DataError("rms_difference: shape mismatch");
    if (a.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace dsfs
