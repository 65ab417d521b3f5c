#include "dsfs/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "dsfs/error.hpp"

namespace dsfs::synth {

double orientation(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double in_circle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

namespace {

// Relative tolerance for predicates, scaled by the point-set extent.
struct Tolerance {
    double orient;
    double circle;
};

Tolerance tolerance_for(const std::vector<Point2>& pts) {
    double extent = 0.0;
    for (const auto& p : pts) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    extent = std::max(extent, 1.0);
    return {1e-12 * extent * extent, 1e-10 * extent * extent * extent * extent};
}

}  // namespace

std::vector<TriangleIndices> delaunay(const std::vector<Point2>& points) {
    const std::size_t n = points.size();
    if (n < 3) throw DataError("delaunay: need at least 3 points");
    const Tolerance tol = tolerance_for(points);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return points[a].x < points[b].x || (points[a].x == points[b].x && points[a].y < points[b].y);
    });
    for (std::size_t i = 1; i < n; ++i) {
        const Point2 &p = points[order[i - 1]], &q = points[order[i]];
        if (p.x == q.x && p.y == q.y) throw DataError("delaunay: duplicate points");
    }

    // First point off the line through the two leftmost points.
    std::size_t first_off = 2;
    while (first_off < n &&
           std::abs(orientation(points[order[0]], points[order[1]], points[order[first_off]])) <= tol.orient)
        ++first_off;
    if (first_off == n) throw DataError("delaunay: all points are collinear");

    std::vector<TriangleIndices> tris;
    auto add_ccw = [&](std::size_t a, std::size_t b, std::size_t c) {
        if (orientation(points[a], points[b], points[c]) < 0.0) std::swap(b, c);
        tris.push_back({a, b, c});
    };

    // Initial fan over the collinear prefix; hull kept counter-clockwise.
    const std::size_t apex = order[first_off];
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i + 1 < first_off; ++i) add_ccw(order[i], order[i + 1], apex);
    if (orientation(points[order[0]], points[order[1]], points[apex]) > 0.0) {
        for (std::size_t i = 0; i < first_off; ++i) hull.push_back(order[i]);
        hull.push_back(apex);
    } else {
        hull.push_back(order[0]);
        hull.push_back(apex);
        for (std::size_t i = first_off; i-- > 1;) hull.push_back(order[i]);
    }

    // Sweep: remaining points are strictly outside the current hull.
    for (std::size_t s = first_off + 1; s < n; ++s) {
        const std::size_t p = order[s];
        const std::size_t h = hull.size();
        std::vector<bool> visible(h);
        for (std::size_t e = 0; e < h; ++e)
            visible[e] = orientation(points[hull[e]], points[hull[(e + 1) % h]], points[p]) < -tol.orient;
        std::size_t start = h;
        for (std::size_t e = 0; e < h; ++e)
            if (visible[e] && !visible[(e + h - 1) % h]) {
                start = e;
                break;
            }
        if (start == h) throw DataError("delaunay: sweep failed to find a visible hull edge");
        std::size_t e = start, count = 0;
        while (visible[e]) {
            add_ccw(hull[e], hull[(e + 1) % h], p);
            e = (e + 1) % h;
            ++count;
        }
        // Replace the interior vertices of the visible chain with p.
        std::vector<std::size_t> next_hull;
        next_hull.reserve(h + 1);
        for (std::size_t i = 0; i < h; ++i) {
            const std::size_t idx = (start + count + i) % h;  // chain end first
            if (i > h - count) continue;
            next_hull.push_back(hull[idx]);
        }
        next_hull.push_back(p);
        hull = std::move(next_hull);
    }

    // Lawson flips until every shared edge is locally Delaunay.
    bool flipped = true;
    std::size_t guard = 0;
    while (flipped) {
        if (++guard > 10 * n * n + 100) throw DataError("delaunay: edge flipping did not terminate");
        flipped = false;
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_owner;
        for (std::size_t t = 0; t < tris.size(); ++t)
            for (int k = 0; k < 3; ++k) edge_owner[{tris[t][k], tris[t][(k + 1) % 3]}] = t;
        for (std::size_t t = 0; t < tris.size() && !flipped; ++t) {
            for (int k = 0; k < 3 && !flipped; ++k) {
                const std::size_t a = tris[t][k], b = tris[t][(k + 1) % 3], c = tris[t][(k + 2) % 3];
                const auto it = edge_owner.find({b, a});
                if (it == edge_owner.end()) continue;
                const auto& other = tris[it->second];
                std::size_t d = other[0];
                for (std::size_t v : other)
                    if (v != a && v != b) d = v;
                if (in_circle(points[a], points[b], points[c], points[d]) > tol.circle) {
                    const std::size_t u = it->second;
                    tris[t] = {a, d, c};
                    tris[u] = {d, b, c};
                    flipped = true;
                }
            }
        }
    }
    return tris;
}

}  // namespace dsfs::synth
