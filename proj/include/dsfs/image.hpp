#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dsfs {

/// Single-channel raster with real intensities, row-major. Intensities are
/// expected in [0, dynamic_range]; operations that produce out-of-range values
/// (e.g. material layers) say so explicitly.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
    GrayImage(std::size_t width, std::size_t height, std::vector<double> data);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
    double at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const GrayImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

using Landmarks = std::vector<Point2>;

/// Euler angles in degrees.
struct PoseAngles {
    double pitch = 0.0;
    double yaw = 0.0;
    double roll = 0.0;
};

enum class Domain { enrollment, operational };

std::string to_string(Domain d);
Domain parse_domain(const std::string& s);

struct RoiRecord {
    GrayImage image;
    PoseAngles pose;
    Landmarks landmarks;
    std::string subject_id;
    Domain domain = Domain::operational;
    std::string path;
};

/// Bilinear sample with border clamping. Coordinates within 1e-9 of an
/// integer are snapped so identity mappings reproduce pixels exactly.
double sample_bilinear(const GrayImage& img, double x, double y);

/// Bilinear resampling to a new size, aligning corner pixel centers.
GrayImage resample(const GrayImage& img, std::size_t width, std::size_t height);

GrayImage clamp(GrayImage img, double lo, double hi);

/// Throws if any landmark lies outside the image bounds.
void check_landmarks(const GrayImage& img, const Landmarks& lms);

/// Column-major vectorisation (x-major), matching the dictionary layout.
std::vector<double> vectorize_column_major(const GrayImage& img);

double rms_difference(const GrayImage& a, const GrayImage& b);

}  // namespace dsfs
