#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "dsfs/image.hpp"
#include "dsfs/shape_model.hpp"

namespace dsfs::synth {

/// R = Rz(roll) * Ry(yaw) * Rx(pitch), angles in degrees. Right-handed,
/// camera looking along +z.
Eigen::Matrix3d rotation_matrix(const PoseAngles& pose);

/// Weak-perspective camera: image = scale * [I2 0] * R * vertex + translation.
struct CameraPose {
    PoseAngles pose;
    double scale = 1.0;
    Point2 translation;
};

/// Camera that maps model x, y in [-1, 1] onto the pixel grid of a
/// width x height image (corner pixel centres), at the given pose.
CameraPose fit_camera(std::size_t width, std::size_t height, const PoseAngles& pose = {});

std::vector<Point2> project_vertices(const std::vector<Vec3>& vertices, const CameraPose& cam);

/// Rasterised texture plus coverage. `value` is unclamped.
struct Raster {
    GrayImage value;
    std::vector<bool> covered;
};

/// Z-buffered rasterisation of the mesh with barycentric uv lookup into
/// `texture` (bilinear). Back-facing and degenerate triangles are skipped.
Raster rasterize(const Mesh3D& mesh, const GrayImage& texture, const CameraPose& cam, std::size_t width,
                 std::size_t height);

/// Fills pixels with covered == false: linear interpolation between the
/// nearest covered pixels along the row and along the column (one-sided
/// copies at the ends). The two directions are averaged when both
/// interpolate (or both only copy); otherwise the interpolating one wins.
GrayImage fill_holes(const GrayImage& img, const std::vector<bool>& covered);

/// rasterize + fill_holes, clamped to [0, max_value].
GrayImage render_pose(const Mesh3D& mesh, const GrayImage& texture, const CameraPose& cam, std::size_t width,
                      std::size_t height, double max_value = 1.0);

/// Lifts 2D points of the frontal view onto the mesh surface (front-most
/// triangle under each point; nearest vertex when none covers it).
std::vector<Vec3> lift_points(const Mesh3D& mesh, const CameraPose& frontal, const Landmarks& points);

}  // namespace dsfs::synth
