#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dsfs/image.hpp"

namespace dsfs::synth {

using Triangle = std::array<std::uint32_t, 3>;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Linear 3D shape model: shape = mean + sum_k alpha_k * basis_k, each vector
/// laid out as [X1, Y1, Z1, X2, ...]. Model space is x right, y down, z away
/// from the camera; `uv` maps each vertex into [0, 1]^2 texture space.
struct ShapeModel {
    std::vector<double> mean_shape;
    std::vector<std::vector<double>> basis;
    std::vector<Triangle> triangles;
    std::vector<Point2> uv;

    std::size_t vertex_count() const noexcept { return mean_shape.size() / 3; }
    std::size_t coefficient_count() const noexcept { return basis.size(); }

    /// Throws DataError on inconsistent lengths or out-of-range indices.
    void validate() const;
};

struct Mesh3D {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<Point2> uv;
};

Mesh3D synthesize_shape(const ShapeModel& model, const std::vector<double>& alpha);

/// Front half of an ellipsoidal head on a regular grid spanning x, y in
/// [-1, 1] (`grid` vertices per side, 45 -> 2025 vertices), with uv equal to
/// the frontal orthographic footprint. Basis: face depth, nose prominence,
/// face width.
ShapeModel procedural_head(std::size_t grid = 45);

/// Model-space positions of the five canonical landmarks of the procedural
/// head: eye centres, nose tip, mouth corners.
std::vector<Vec3> procedural_landmarks_3d(const ShapeModel& model, const std::vector<double>& alpha = {});

// Binary container, little-endian:
//   magic "DSFSSHP1", u64 n_s, u64 m (basis count), u64 n_tri,
//   f64[3 n_s] mean, f64[m][3 n_s] basis, i32[n_tri][3] triangles, f64[n_s][2] uv
void write_shape_model(const std::filesystem::path& path, const ShapeModel& model);
ShapeModel read_shape_model(const std::filesystem::path& path);

}  // namespace dsfs::synth
