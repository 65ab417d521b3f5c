#include "dsfs/render.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "dsfs/error.hpp"

namespace dsfs::synth {

Eigen::Matrix3d rotation_matrix(const PoseAngles& pose) {
    constexpr double deg = std::numbers::pi / 180.0;
    const Eigen::Matrix3d rx = Eigen::AngleAxisd(pose.pitch * deg, Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d ry = Eigen::AngleAxisd(pose.yaw * deg, Eigen::Vector3d::UnitY()).toRotationMatrix();
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(pose.roll * deg, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return rz * ry * rx;
}

CameraPose fit_camera(std::size_t width, std::size_t height, const PoseAngles& pose) {
    if (width == 0 || height == 0) throw DataError("fit_camera: empty image size");
    CameraPose cam;
    cam.pose = pose;
    cam.scale = (static_cast<double>(std::min(width, height)) - 1.0) / 2.0;
    cam.translation = {(static_cast<double>(width) - 1.0) / 2.0, (static_cast<double>(height) - 1.0) / 2.0};
    return cam;
}

namespace {

struct Projected {
    double x, y, z;
};

std::vector<Projected> transform(const std::vector<Vec3>& vertices, const CameraPose& cam) {
    const Eigen::Matrix3d r = rotation_matrix(cam.pose);
    std::vector<Projected> out;
    out.reserve(vertices.size());
    for (const auto& v : vertices) {
        const Eigen::Vector3d p = r * Eigen::Vector3d(v.x, v.y, v.z);
        out.push_back({cam.scale * p.x() + cam.translation.x, cam.scale * p.y() + cam.translation.y, p.z()});
    }
    return out;
}

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

}  // namespace

std::vector<Point2> project_vertices(const std::vector<Vec3>& vertices, const CameraPose& cam) {
    std::vector<Point2> out;
    out.reserve(vertices.size());
    for (const auto& p : transform(vertices, cam)) out.push_back({p.x, p.y});
    return out;
}

Raster rasterize(const Mesh3D& mesh, const GrayImage& texture, const CameraPose& cam, std::size_t width,
                 std::size_t height) {
    if (mesh.vertices.empty() || mesh.triangles.empty()) throw DataError("rasterize: empty mesh");
    if (mesh.uv.size() != mesh.vertices.size()) throw DataError("rasterize: mesh has no uv coordinates");
    if (texture.empty()) throw DataError("rasterize: empty texture");

    const auto pts = transform(mesh.vertices, cam);
    Raster out{GrayImage(width, height), std::vector<bool>(width * height, false)};
    std::vector<double> zbuf(width * height, std::numeric_limits<double>::infinity());
    const double tw = static_cast<double>(texture.width()) - 1.0;
    const double th = static_cast<double>(texture.height()) - 1.0;
    constexpr double kInside = -1e-9;

    for (const auto& t : mesh.triangles) {
        const Projected &a = pts[t[0]], &b = pts[t[1]], &c = pts[t[2]];
        const double area = cross(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y);
        if (std::abs(area) < 1e-12) continue;
        const Point2 &ua = mesh.uv[t[0]], &ub = mesh.uv[t[1]], &uc = mesh.uv[t[2]];
        const double uv_area = cross(ub.x - ua.x, ub.y - ua.y, uc.x - ua.x, uc.y - ua.y);
        if (uv_area * area < 0.0) continue;  // back-facing relative to the texture layout

        const double fx0 = std::max(0.0, std::ceil(std::min({a.x, b.x, c.x}) - 1e-9));
        const double fy0 = std::max(0.0, std::ceil(std::min({a.y, b.y, c.y}) - 1e-9));
        const double fx1 = std::min(static_cast<double>(width) - 1.0, std::floor(std::max({a.x, b.x, c.x}) + 1e-9));
        const double fy1 = std::min(static_cast<double>(height) - 1.0, std::floor(std::max({a.y, b.y, c.y}) + 1e-9));
        if (fx0 > fx1 || fy0 > fy1) continue;
        for (auto y = static_cast<std::size_t>(fy0); y <= static_cast<std::size_t>(fy1); ++y) {
            for (auto x = static_cast<std::size_t>(fx0); x <= static_cast<std::size_t>(fx1); ++x) {
                const double px = static_cast<double>(x), py = static_cast<double>(y);
                const double l0 = cross(b.x - px, b.y - py, c.x - px, c.y - py) / area;
                const double l1 = cross(c.x - px, c.y - py, a.x - px, a.y - py) / area;
                const double l2 = 1.0 - l0 - l1;
                if (l0 < kInside || l1 < kInside || l2 < kInside) continue;
                const double z = l0 * a.z + l1 * b.z + l2 * c.z;
                const std::size_t idx = y * width + x;
                if (z >= zbuf[idx]) continue;
                zbuf[idx] = z;
                const double u = l0 * ua.x + l1 * ub.x + l2 * uc.x;
                const double v = l0 * ua.y + l1 * ub.y + l2 * uc.y;
                out.value.at(x, y) = sample_bilinear(texture, u * tw, v * th);
                out.covered[idx] = true;
            }
        }
    }
    return out;
}

GrayImage fill_holes(const GrayImage& img, const std::vector<bool>& covered) {
    const std::size_t w = img.width(), h = img.height();
    if (covered.size() != w * h) throw DataError("fill_holes: mask size mismatch");
    double known_sum = 0.0;
    std::size_t known = 0;
    for (std::size_t i = 0; i < covered.size(); ++i)
        if (covered[i]) {
            known_sum += img.data()[i];
            ++known;
        }
    if (known == covered.size()) return img;
    const double fallback = known ? known_sum / static_cast<double>(known) : 0.0;

    // Estimates along a line of n samples addressed by `index`. Quality 2
    // marks interpolation between two covered pixels, 1 a one-sided copy.
    auto line_estimate = [&](std::size_t n, auto index, std::vector<double>& est, std::vector<unsigned char>& quality) {
        std::size_t prev = n;  // n == none
        for (std::size_t i = 0; i < n; ++i) {
            if (covered[index(i)]) {
                prev = i;
                continue;
            }
            std::size_t next = i + 1;
            while (next < n && !covered[index(next)]) ++next;
            if (prev < n && next < n) {
                const double t = static_cast<double>(i - prev) / static_cast<double>(next - prev);
                est[index(i)] = (1.0 - t) * img.data()[index(prev)] + t * img.data()[index(next)];
                quality[index(i)] = 2;
            } else if (prev < n || next < n) {
                est[index(i)] = img.data()[index(prev < n ? prev : next)];
                quality[index(i)] = 1;
            }
        }
    };

    std::vector<double> row_est(w * h, 0.0), col_est(w * h, 0.0);
    std::vector<unsigned char> row_q(w * h, 0), col_q(w * h, 0);
    for (std::size_t y = 0; y < h; ++y) line_estimate(w, [&](std::size_t i) { return y * w + i; }, row_est, row_q);
    for (std::size_t x = 0; x < w; ++x) line_estimate(h, [&](std::size_t i) { return i * w + x; }, col_est, col_q);

    // Average the two directions when they are equally well supported,
    // otherwise trust the interpolated one over an edge copy.
    GrayImage out = img;
    for (std::size_t i = 0; i < w * h; ++i) {
        if (covered[i]) continue;
        if (row_q[i] == 0 && col_q[i] == 0)
            out.data()[i] = fallback;
        else if (row_q[i] == col_q[i])
            out.data()[i] = 0.5 * (row_est[i] + col_est[i]);
        else
            out.data()[i] = row_q[i] > col_q[i] ? row_est[i] : col_est[i];
    }
    return out;
}

GrayImage render_pose(const Mesh3D& mesh, const GrayImage& texture, const CameraPose& cam, std::size_t width,
                      std::size_t height, double max_value) {
    const Raster r = rasterize(mesh, texture, cam, width, height);
    return clamp(fill_holes(r.value, r.covered), 0.0, max_value);
}

std::vector<Vec3> lift_points(const Mesh3D& mesh, const CameraPose& frontal, const Landmarks& points) {
    if (mesh.vertices.empty()) throw DataError("lift_points: empty mesh");
    const auto pts = transform(mesh.vertices, frontal);
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& q : points) {
        double best_z = std::numeric_limits<double>::infinity();
        Eigen::Vector3d best = Eigen::Vector3d::Zero();
        bool found = false;
        for (const auto& t : mesh.triangles) {
            const Projected &a = pts[t[0]], &b = pts[t[1]], &c = pts[t[2]];
            const double area = cross(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y);
            if (std::abs(area) < 1e-12) continue;
            const double l0 = cross(b.x - q.x, b.y - q.y, c.x - q.x, c.y - q.y) / area;
            const double l1 = cross(c.x - q.x, c.y - q.y, a.x - q.x, a.y - q.y) / area;
            const double l2 = 1.0 - l0 - l1;
            if (l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9) continue;
            const double z = l0 * a.z + l1 * b.z + l2 * c.z;
            if (z >= best_z) continue;
            best_z = z;
            const Vec3 &va = mesh.vertices[t[0]], &vb = mesh.vertices[t[1]], &vc = mesh.vertices[t[2]];
            best = {l0 * va.x + l1 * vb.x + l2 * vc.x, l0 * va.y + l1 * vb.y + l2 * vc.y,
                    l0 * va.z + l1 * vb.z + l2 * vc.z};
            found = true;
        }
        if (!found) {
            std::size_t nearest = 0;
            double d_best = std::numeric_limits<double>::infinity();
            for (std::size_t v = 0; v < pts.size(); ++v) {
                const double d = (pts[v].x - q.x) * (pts[v].x - q.x) + (pts[v].y - q.y) * (pts[v].y - q.y);
                if (d < d_best) {
                    d_best = d;
                    nearest = v;
                }
            }
            const Vec3& v = mesh.vertices[nearest];
            best = {v.x, v.y, v.z};
        }
        out.push_back({best.x(), best.y(), best.z()});
    }
    return out;
}

}  // namespace dsfs::synth
