#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "dsfs/image.hpp"

namespace dsfs::synth {

using TriangleIndices = std::array<std::size_t, 3>;

/// Delaunay triangulation of a planar point set: lexicographic sweep to an
/// initial triangulation of the convex hull, then Lawson edge flips until every
/// interior edge is locally Delaunay. Triangles are counter-clockwise in a
/// y-up frame (positive orientation determinant).
/// Throws DataError for fewer than 3 points, duplicate points, or a fully
/// collinear set.
std::vector<TriangleIndices> delaunay(const std::vector<Point2>& points);

/// Positive when c lies to the left of a -> b.
double orientation(const Point2& a, const Point2& b, const Point2& c);

/// Positive when d lies strictly inside the circumcircle of the
/// counter-clockwise triangle (a, b, c).
double in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

}  // namespace dsfs::synth
