// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "isocull/geom.hpp"
#include "isocull/grid.hpp"
#include "isocull/mc_tables.hpp"
#include "isocull/random.hpp"

namespace isocull {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

namespace detail {

// Cell corners in the Bourke convention, offsets in (i,j,k).
inline constexpr int kCornerOffset[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
};

// Each cell edge identified by the lower endpoint corner and its axis, so
// adjacent cells share one canonical vertex per crossed grid edge.
inline constexpr int kEdgeBase[12] = {0, 1, 3, 0, 4, 5, 7, 4, 0, 1, 2, 3};
inline constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};

struct VecKey {
    std::uint64_t x, y, z;
    bool operator==(const VecKey&) const = default;
};

struct VecKeyHash {
    std::size_t operator()(const VecKey& k) const {
        std::uint64_t h = k.x * 0x9e3779b97f4a7c15ull;
        h ^= k.y + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h ^= k.z + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

inline VecKey vec_key(const Vec3& v) {
    VecKey k;
    std::memcpy(&k.x, &v.x, 8);
    std::memcpy(&k.y, &v.y, 8);
    std::memcpy(&k.z, &v.z, 8);
    return k;
}

}  // namespace detail

// Marching cubes over the node lattice with linear edge interpolation at the
// isolevel. Runs on scalar values; a binarized grid works too and puts every
// vertex at an edge midpoint. Exactly coincident vertices are welded and
// zero-area triangles dropped, so well-resolved closed fields yield
// watertight meshes.
inline TriangleMesh marching_cubes(const LevelGrid& grid, double iso = 0.5) {
    if (!grid.fully_assigned()) throw std::invalid_argument("marching_cubes: grid has unknown nodes");
    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, int> edge_vertex;  // node_index*3+axis -> vertex id
    int n = grid.nodes();

    auto edge_vertex_id = [&](int i, int j, int k, int axis) {
        std::size_t base = grid.index(i, j, k);
        std::uint64_t key = static_cast<std::uint64_t>(base) * 3 + static_cast<std::uint64_t>(axis);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        int i1 = i + (axis == 0), j1 = j + (axis == 1), k1 = k + (axis == 2);
        double v0 = grid.values[base];
        double v1 = grid.values[grid.index(i1, j1, k1)];
        double denom = v1 - v0;
        double t = std::abs(denom) < 1e-300 ? 0.5 : (iso - v0) / denom;
        t = clamp(t, 0.0, 1.0);
        Vec3 p = lerp(grid.node_position(i, j, k), grid.node_position(i1, j1, k1), t);
        int id = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        edge_vertex.emplace(key, id);
        return id;
    };

    for (int k = 0; k < grid.cells; ++k)
        for (int j = 0; j < grid.cells; ++j)
            for (int i = 0; i < grid.cells; ++i) {
                unsigned cube = 0;
                for (int c = 0; c < 8; ++c) {
                    const int* off = detail::kCornerOffset[c];
                    double v = grid.values[grid.index(i + off[0], j + off[1], k + off[2])];
                    if (v < iso) cube |= 1u << c;
                }
                std::uint16_t edges = kMcEdgeTable[cube];
                if (edges == 0) continue;
                int ev[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1u << e))) continue;
                    const int* off = detail::kCornerOffset[detail::kEdgeBase[e]];
                    ev[e] = edge_vertex_id(i + off[0], j + off[1], k + off[2], detail::kEdgeAxis[e]);
                }
                const auto& row = kMcTriTable[cube];
                for (int t = 0; row[t] != -1; t += 3)
                    mesh.triangles.push_back({ev[row[t]], ev[row[t + 1]], ev[row[t + 2]]});
            }

    // Weld bit-identical positions (edge interpolation can land exactly on a
    // shared node), then drop degenerate triangles and orphaned vertices.
    std::unordered_map<detail::VecKey, int, detail::VecKeyHash> canon;
    std::vector<int> remap(mesh.vertices.size());
    std::vector<Vec3> welded;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        auto [it, inserted] = canon.emplace(detail::vec_key(mesh.vertices[v]),
                                            static_cast<int>(welded.size()));
        if (inserted) welded.push_back(mesh.vertices[v]);
        remap[v] = it->second;
    }

    std::vector<std::array<int, 3>> tris;
    tris.reserve(mesh.triangles.size());
    for (auto& t : mesh.triangles) {
        std::array<int, 3> r{remap[t[0]], remap[t[1]], remap[t[2]]};
        if (r[0] == r[1] || r[1] == r[2] || r[0] == r[2]) continue;
        if (triangle_area(welded[r[0]], welded[r[1]], welded[r[2]]) < 1e-12) continue;
        tris.push_back(r);
    }

    std::vector<int> used(welded.size(), -1);
    TriangleMesh out;
    for (auto& t : tris) {
        std::array<int, 3> r{};
        for (int c = 0; c < 3; ++c) {
            if (used[t[c]] < 0) {
                used[t[c]] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(welded[t[c]]);
            }
            r[c] = used[t[c]];
        }
        out.triangles.push_back(r);
    }
    return out;
}

// ASCII OBJ, "v x y z" and 1-based "f a b c" lines in deterministic order.
inline void export_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_obj: cannot open " + path);
    out << "# isocull mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
        << " triangles\n";
    char line[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(line, sizeof(line), "v %.9f %.9f %.9f\n", v.x, v.y, v.z);
        out << line;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (!out) throw std::runtime_error("export_obj: write failed for " + path);
}

inline TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_obj: cannot open " + path);
    TriangleMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v.x >> v.y >> v.z;
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> t{};
            for (int c = 0; c < 3; ++c) {
                std::string tok;
                ss >> tok;
                t[c] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            mesh.triangles.push_back(t);
        }
    }
    for (const auto& t : mesh.triangles)
        for (int c : t)
            if (c < 0 || c >= static_cast<int>(mesh.vertices.size()))
                throw std::runtime_error("load_obj: face index out of range in " + path);
    return mesh;
}

struct SurfaceSamples {
    std::vector<Vec3> points;
};

// n points drawn uniformly by surface area, reproducible for a given seed.
inline SurfaceSamples sample_surface(const TriangleMesh& mesh, int n, std::uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("sample_surface: empty mesh");
    std::vector<double> areas(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        areas[t] = triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    }
    std::vector<double> cdf = build_cdf(areas);
    Rng rng(seed);
    SurfaceSamples out;
    out.points.reserve(n);
    for (int s = 0; s < n; ++s) {
        std::size_t t = sample_cdf(cdf, rng.uniform());
        const auto& tri = mesh.triangles[t];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Vec3& a = mesh.vertices[tri[0]];
        out.points.push_back(a + u * (mesh.vertices[tri[1]] - a) + v * (mesh.vertices[tri[2]] - a));
    }
    return out;
}

inline void dump_samples_csv(const SurfaceSamples& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_samples_csv: cannot open " + path);
    out << "x,y,z\n";
    char line[128];
    for (const Vec3& p : samples.points) {
        std::snprintf(line, sizeof(line), "%.9f,%.9f,%.9f\n", p.x, p.y, p.z);
        out << line;
    }
}

}  // namespace isocull
