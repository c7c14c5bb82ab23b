// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "isocull/geom.hpp"
#include "isocull/mesh.hpp"
#include "isocull/parallel.hpp"

namespace isocull {

// Closest point on triangle abc to p (Ericson, Real-Time Collision
// Detection, 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    double denom = 1.0 / (va + vb + vc);
    return a + (vb * denom) * ab + (vc * denom) * ac;
}

inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    return norm(p - closest_point_on_triangle(p, a, b, c));
}

// Median-split kd-tree over points; exact nearest neighbor.
class KdTree3 {
  public:
    explicit KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("KdTree3: empty point set");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        root_ = build(0, order_.size());
    }

    struct Hit {
        std::size_t index = 0;
        double distance = 0.0;
    };

    Hit nearest(const Vec3& q) const {
        Hit best{0, std::numeric_limits<double>::infinity()};
        search(root_, q, best);
        best.distance = std::sqrt(best.distance);
        return best;
    }

  private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;
    };

    static double coord(const Vec3& v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

    int build(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= 8) return id;

        Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (std::size_t t = begin; t < end; ++t) {
            const Vec3& p = points_[order_[t]];
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        Vec3 extent = hi - lo;
        int axis = extent.x >= extent.y && extent.x >= extent.z ? 0 : (extent.y >= extent.z ? 1 : 2);
        std::size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             return coord(points_[a], axis) < coord(points_[b], axis);
                         });
        int left = build(begin, mid);
        int right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = coord(points_[order_[mid]], axis);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(int id, const Vec3& q, Hit& best) const {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t t = node.begin; t < node.end; ++t) {
                double d2 = norm2(q - points_[order_[t]]);
                if (d2 < best.distance) {
                    best.distance = d2;
                    best.index = order_[t];
                }
            }
            return;
        }
        double delta = coord(q, node.axis) - node.split;
        int near = delta < 0.0 ? node.left : node.right;
        int far = delta < 0.0 ? node.right : node.left;
        search(near, q, best);
        if (delta * delta < best.distance) search(far, q, best);
    }

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

// AABB tree over triangles; exact point-to-mesh distance via lower-bound
// pruning.
class TriangleBvh {
  public:
    explicit TriangleBvh(const TriangleMesh& mesh) {
        if (mesh.empty()) throw std::invalid_argument("TriangleBvh: empty mesh");
        tris_.reserve(mesh.triangles.size());
        for (const auto& t : mesh.triangles)
            tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
        order_.resize(tris_.size());
        std::iota(order_.begin(), order_.end(), 0);
        root_ = build(0, order_.size());
    }

    double distance(const Vec3& q) const {
        double best = std::numeric_limits<double>::infinity();
        search(root_, q, best);
        return std::sqrt(best);
    }

  private:
    struct Tri {
        Vec3 a, b, c;
    };
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;
    };

    static double coord(const Vec3& v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

    Vec3 centroid(std::size_t t) const {
        return (1.0 / 3.0) * (tris_[t].a + tris_[t].b + tris_[t].c);
    }

    int build(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        node.lo = {1e300, 1e300, 1e300};
        node.hi = {-1e300, -1e300, -1e300};
        for (std::size_t t = begin; t < end; ++t)
            for (const Vec3& p : {tris_[order_[t]].a, tris_[order_[t]].b, tris_[order_[t]].c}) {
                node.lo = {std::min(node.lo.x, p.x), std::min(node.lo.y, p.y), std::min(node.lo.z, p.z)};
                node.hi = {std::max(node.hi.x, p.x), std::max(node.hi.y, p.y), std::max(node.hi.z, p.z)};
            }
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= 4) return id;

        Vec3 extent = node.hi - node.lo;
        int axis = extent.x >= extent.y && extent.x >= extent.z ? 0 : (extent.y >= extent.z ? 1 : 2);
        std::size_t mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) {
                             return coord(centroid(a), axis) < coord(centroid(b), axis);
                         });
        int left = build(begin, mid);
        int right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    double box_distance2(const Node& node, const Vec3& q) const {
        double d2 = 0.0;
        double dx = q.x < node.lo.x ? node.lo.x - q.x : (q.x > node.hi.x ? q.x - node.hi.x : 0.0);
        double dy = q.y < node.lo.y ? node.lo.y - q.y : (q.y > node.hi.y ? q.y - node.hi.y : 0.0);
        double dz = q.z < node.lo.z ? node.lo.z - q.z : (q.z > node.hi.z ? q.z - node.hi.z : 0.0);
        d2 = dx * dx + dy * dy + dz * dz;
        return d2;
    }

    void search(int id, const Vec3& q, double& best) const {
        const Node& node = nodes_[id];
        if (box_distance2(node, q) >= best) return;
        if (node.left < 0) {
            for (std::size_t t = node.begin; t < node.end; ++t) {
                const Tri& tri = tris_[order_[t]];
                Vec3 cp = closest_point_on_triangle(q, tri.a, tri.b, tri.c);
                best = std::min(best, norm2(q - cp));
            }
            return;
        }
        double dl = box_distance2(nodes_[node.left], q);
        double dr = box_distance2(nodes_[node.right], q);
        if (dl <= dr) {
            search(node.left, q, best);
            search(node.right, q, best);
        } else {
            search(node.right, q, best);
            search(node.left, q, best);
        }
    }

    std::vector<Tri> tris_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

namespace detail {

inline std::vector<double> nearest_distances(const SurfaceSamples& from, const KdTree3& tree,
                                             int workers) {
    std::vector<double> d(from.points.size());
    parallel_for(from.points.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) d[i] = tree.nearest(from.points[i]).distance;
    });
    return d;
}

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

// Symmetric Chamfer distance: half the sum of the two directed mean
// nearest-neighbor distances.
inline double chamfer_distance(const SurfaceSamples& a, const SurfaceSamples& b, int workers = 1) {
    if (a.points.empty() || b.points.empty())
        throw std::invalid_argument("chamfer_distance: empty sample set");
    KdTree3 tree_b(b.points);
    KdTree3 tree_a(a.points);
    std::vector<double> d_ab = detail::nearest_distances(a, tree_b, workers);
    std::vector<double> d_ba = detail::nearest_distances(b, tree_a, workers);
    return 0.5 * (detail::mean(d_ab) + detail::mean(d_ba));
}

// Mean exact point-to-surface distance from prediction samples to the
// ground-truth mesh.
inline double p2s_distance(const SurfaceSamples& pred, const TriangleMesh& gt, int workers = 1) {
    if (pred.points.empty()) throw std::invalid_argument("p2s_distance: empty sample set");
    TriangleBvh bvh(gt);
    std::vector<double> d(pred.points.size());
    parallel_for(pred.points.size(), workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) d[i] = bvh.distance(pred.points[i]);
    });
    return detail::mean(d);
}

inline double hausdorff_distance(const SurfaceSamples& a, const TriangleMesh& b, int workers = 1) {
    if (a.points.empty()) throw std::invalid_argument("hausdorff_distance: empty sample set");
    TriangleBvh bvh(b);
    std::vector<double> d(a.points.size());
    parallel_for(a.points.size(), workers, [&](std::size_t bgn, std::size_t e) {
        for (std::size_t i = bgn; i < e; ++i) d[i] = bvh.distance(a.points[i]);
    });
    double best = 0.0;
    for (double x : d) best = std::max(best, x);
    return best;
}

}  // namespace isocull
