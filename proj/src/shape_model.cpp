#include "dsfs/shape_model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"
#include "binary_io.hpp"

namespace dsfs::synth {

void ShapeModel::validate() const {
    if (mean_shape.empty() || mean_shape.size() % 3 != 0) throw DataError("shape model: mean length must be 3 n_s");
    const std::size_t ns = vertex_count();
    for (const auto& b : basis)
        if (b.size() != mean_shape.size()) throw DataError("shape model: basis vector length mismatch");
    for (const auto& t : triangles)
        for (auto v : t)
            if (v >= ns) throw DataError("shape model: triangle index out of range");
    if (uv.size() != ns) throw DataError("shape model: uv count must equal vertex count");
}

Mesh3D synthesize_shape(const ShapeModel& model, const std::vector<double>& alpha) {
    if (alpha.size() != model.basis.size())
        throw DataError("synthesize_shape: expected " + std::to_string(model.basis.size()) + " coefficients, got " +
                        std::to_string(alpha.size()));
    std::vector<double> s = model.mean_shape;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (alpha[k] == 0.0) continue;
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += alpha[k] * model.basis[k][i];
    }
    Mesh3D mesh;
    mesh.vertices.resize(model.vertex_count());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) mesh.vertices[v] = {s[3 * v], s[3 * v + 1], s[3 * v + 2]};
    mesh.triangles = model.triangles;
    mesh.uv = model.uv;
    return mesh;
}

namespace {

constexpr double kDepth = 0.9;    // ellipsoid half-depth
constexpr double kRadiusX = 0.82;
constexpr double kRadiusY = 1.0;

double bump(double x, double y, double cx, double cy, double s) {
    return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2.0 * s * s));
}

// Signed depth offsets (negative = toward the camera).
double head_z(double x, double y) {
    const double q = 1.0 - (x / kRadiusX) * (x / kRadiusX) - (y / kRadiusY) * (y / kRadiusY);
    return q > 0.0 ? -kDepth * std::sqrt(q) : 0.0;
}

double nose_z(double x, double y) { return -0.25 * bump(x, y, 0.0, 0.1, 0.12); }

struct CanonicalLandmark {
    double x, y;
};
constexpr CanonicalLandmark kLandmarks[] = {
    {-0.32, -0.22}, {0.32, -0.22},  // eyes
    {0.0, 0.12},                    // nose tip
    {-0.26, 0.45}, {0.26, 0.45},    // mouth corners
};

}  // namespace

ShapeModel procedural_head(std::size_t grid) {
    if (grid < 2) throw DataError("procedural_head: grid must have at least 2 vertices per side");
    ShapeModel m;
    const std::size_t ns = grid * grid;
    m.mean_shape.resize(3 * ns);
    m.basis.assign(3, std::vector<double>(3 * ns, 0.0));
    m.uv.resize(ns);
    const double step = 2.0 / static_cast<double>(grid - 1);
    for (std::size_t j = 0; j < grid; ++j) {
        for (std::size_t i = 0; i < grid; ++i) {
            const std::size_t v = j * grid + i;
            const double x = -1.0 + step * static_cast<double>(i);
            const double y = -1.0 + step * static_cast<double>(j);
            m.mean_shape[3 * v] = x;
            m.mean_shape[3 * v + 1] = y;
            m.mean_shape[3 * v + 2] = head_z(x, y) + nose_z(x, y);
            m.uv[v] = {static_cast<double>(i) / static_cast<double>(grid - 1),
                       static_cast<double>(j) / static_cast<double>(grid - 1)};
            m.basis[0][3 * v + 2] = 0.3 * head_z(x, y);  // deeper face
            m.basis[1][3 * v + 2] = nose_z(x, y);        // nose prominence
            m.basis[2][3 * v] = 0.1 * x;                 // wider face
        }
    }
    for (std::size_t j = 0; j + 1 < grid; ++j) {
        for (std::size_t i = 0; i + 1 < grid; ++i) {
            const auto a = static_cast<std::uint32_t>(j * grid + i);
            const auto b = a + 1;
            const auto c = static_cast<std::uint32_t>(a + grid);
            const auto d = c + 1;
            m.triangles.push_back({a, b, d});
            m.triangles.push_back({a, d, c});
        }
    }
    return m;
}

std::vector<Vec3> procedural_landmarks_3d(const ShapeModel& model, const std::vector<double>& alpha) {
    // Landmarks are located in the frontal footprint, so take x, y from the
    // canonical layout and depth from the synthesised surface at that point.
    const Mesh3D mesh = synthesize_shape(model, alpha.empty() ? std::vector<double>(model.basis.size(), 0.0) : alpha);
    std::vector<Vec3> out;
    for (const auto& lm : kLandmarks) {
        const Point2 uv{(lm.x + 1.0) / 2.0, (lm.y + 1.0) / 2.0};
        bool found = false;
        for (const auto& t : mesh.triangles) {
            const Point2 &a = mesh.uv[t[0]], &b = mesh.uv[t[1]], &c = mesh.uv[t[2]];
            const double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
            if (std::abs(det) < 1e-15) continue;
            const double l0 = ((b.y - c.y) * (uv.x - c.x) + (c.x - b.x) * (uv.y - c.y)) / det;
            const double l1 = ((c.y - a.y) * (uv.x - c.x) + (a.x - c.x) * (uv.y - c.y)) / det;
            const double l2 = 1.0 - l0 - l1;
            if (l0 < -1e-12 || l1 < -1e-12 || l2 < -1e-12) continue;
            const Vec3 &p = mesh.vertices[t[0]], &q = mesh.vertices[t[1]], &r = mesh.vertices[t[2]];
            out.push_back({l0 * p.x + l1 * q.x + l2 * r.x, l0 * p.y + l1 * q.y + l2 * r.y,
                           l0 * p.z + l1 * q.z + l2 * r.z});
            found = true;
            break;
        }
        if (!found) throw DataError("procedural_landmarks_3d: landmark outside mesh footprint");
    }
    return out;
}

namespace {

constexpr char kShapeMagic[8] = {'D', 'S', 'F', 'S', 'S', 'H', 'P', '1'};

}  // namespace

void write_shape_model(const std::filesystem::path& path, const ShapeModel& model) {
    model.validate();
    std::string out(kShapeMagic, sizeof(kShapeMagic));
    bin::put<std::uint64_t>(out, model.vertex_count());
    bin::put<std::uint64_t>(out, model.basis.size());
    bin::put<std::uint64_t>(out, model.triangles.size());
    for (double v : model.mean_shape) bin::put(out, v);
    for (const auto& b : model.basis)
        for (double v : b) bin::put(out, v);
    for (const auto& t : model.triangles)
        for (auto v : t) bin::put<std::int32_t>(out, static_cast<std::int32_t>(v));
    for (const auto& p : model.uv) {
        bin::put(out, p.x);
        bin::put(out, p.y);
    }
    io::write_file_atomic(path, out);
}

ShapeModel read_shape_model(const std::filesystem::path& path) {
    const std::string in = bin::slurp(path);
    if (in.size() < sizeof(kShapeMagic) || std::memcmp(in.data(), kShapeMagic, sizeof(kShapeMagic)) != 0)
        throw DataError(path.string() + ": not a shape model container");
    std::size_t pos = sizeof(kShapeMagic);
    const auto ns = bin::take<std::uint64_t>(in, pos);
    const auto nb = bin::take<std::uint64_t>(in, pos);
    const auto nt = bin::take<std::uint64_t>(in, pos);
    const std::size_t expected = pos + 8 * (3 * ns) * (1 + nb) + 12 * nt + 16 * ns;
    if (in.size() != expected) throw DataError(path.string() + ": container size does not match header");
    ShapeModel m;
    m.mean_shape.resize(3 * ns);
    for (double& v : m.mean_shape) v = bin::take<double>(in, pos);
    m.basis.assign(nb, std::vector<double>(3 * ns));
    for (auto& b : m.basis)
        for (double& v : b) v = bin::take<double>(in, pos);
    m.triangles.resize(nt);
    for (auto& t : m.triangles)
        for (auto& v : t) {
            const auto i = bin::take<std::int32_t>(in, pos);
            if (i < 0) throw DataError(path.string() + ": negative triangle index");
            v = static_cast<std::uint32_t>(i);
        }
    m.uv.resize(ns);
    for (auto& p : m.uv) {
        p.x = bin::take<double>(in, pos);
        p.y = bin::take<double>(in, pos);
    }
    m.validate();
    return m;
}

}  // namespace dsfs::synth
