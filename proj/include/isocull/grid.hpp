// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "isocull/geom.hpp"

namespace isocull {

enum class NodeState : std::uint8_t { unknown = 0, interpolated = 1, evaluated = 2, shadow = 3 };

// Regular node grid at one refinement level over the [-1,1]^3 cube.
// R_l cells per axis, R_l+1 nodes per axis, values laid out x-fastest.
// Node (i,j,k) sits at NDC (-1+2i/R, -1+2j/R, +1-2k/R): x and y follow
// pixel axes, k=0 is the near plane and larger k moves away from the
// observer.
struct LevelGrid {
    int level = 0;
    int cells = 0;
    std::vector<float> values;
    std::vector<NodeState> states;

    static LevelGrid make(int level, int cells, NodeState init = NodeState::unknown) {
        LevelGrid g;
        g.level = level;
        g.cells = cells;
        std::size_t n = g.node_count();
        g.values.assign(n, 0.0f);
        g.states.assign(n, init);
        return g;
    }

    int nodes() const { return cells + 1; }

    std::size_t node_count() const {
        std::size_t n = static_cast<std::size_t>(cells + 1);
        return n * n * n;
    }

    std::size_t index(int i, int j, int k) const {
        std::size_t n = static_cast<std::size_t>(nodes());
        return static_cast<std::size_t>(i) + n * (static_cast<std::size_t>(j) + n * static_cast<std::size_t>(k));
    }

    Vec3 node_position(int i, int j, int k) const {
        double r = static_cast<double>(cells);
        return {-1.0 + 2.0 * i / r, -1.0 + 2.0 * j / r, 1.0 - 2.0 * k / r};
    }

    bool fully_assigned() const {
        for (NodeState s : states)
            if (s == NodeState::unknown) return false;
        return true;
    }
};

struct NodeMask {
    int nodes_per_axis = 0;
    std::vector<std::uint8_t> bits;

    static NodeMask make(int nodes_per_axis) {
        NodeMask m;
        m.nodes_per_axis = nodes_per_axis;
        std::size_t n = static_cast<std::size_t>(nodes_per_axis);
        m.bits.assign(n * n * n, 0);
        return m;
    }

    bool test(std::size_t idx) const { return bits[idx] != 0; }
    void set(std::size_t idx) { bits[idx] = 1; }

    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint8_t b : bits) c += b;
        return c;
    }
};

// Doubles the resolution. Even-index nodes copy the coarse value and state
// verbatim (no re-evaluation); odd-index nodes take the trilinear
// interpolant and are marked interpolated.
inline LevelGrid upsample_interpolate(const LevelGrid& coarse) {
    if (!coarse.fully_assigned())
        throw std::invalid_argument("upsample_interpolate: coarse grid has unknown nodes");
    LevelGrid fine = LevelGrid::make(coarse.level + 1, coarse.cells * 2, NodeState::interpolated);
    int fn = fine.nodes();
    int cn = coarse.nodes();
    for (int k = 0; k < fn; ++k) {
        int k0 = k / 2, k1 = (k + 1) / 2;
        for (int j = 0; j < fn; ++j) {
            int j0 = j / 2, j1 = (j + 1) / 2;
            for (int i = 0; i < fn; ++i) {
                int i0 = i / 2, i1 = (i + 1) / 2;
                std::size_t fi = fine.index(i, j, k);
                if (i0 == i1 && j0 == j1 && k0 == k1) {
                    std::size_t ci = coarse.index(i0, j0, k0);
                    fine.values[fi] = coarse.values[ci];
                    fine.states[fi] = coarse.states[ci];
                    continue;
                }
                double sum = 0.0;
                int cnt = 0;
                for (int kk = k0; kk <= k1; ++kk)
                    for (int jj = j0; jj <= j1; ++jj)
                        for (int ii = i0; ii <= i1; ++ii) {
                            sum += coarse.values[coarse.index(ii, jj, kk)];
                            ++cnt;
                        }
                fine.values[fi] = static_cast<float>(sum / cnt);
            }
        }
    }
    (void)cn;
    return fine;
}

inline float binarize_value(float v) { return v >= 0.5f ? 1.0f : 0.0f; }

// Threshold is inclusive at 0.5 so on-surface nodes count as inside.
inline LevelGrid binarize(const LevelGrid& grid) {
    if (!grid.fully_assigned()) throw std::invalid_argument("binarize: grid has unknown nodes");
    LevelGrid out = grid;
    for (float& v : out.values) v = binarize_value(v);
    return out;
}

// Nodes whose value is strictly between 0 and 1.
inline NodeMask boundary_candidates(const LevelGrid& grid) {
    NodeMask mask = NodeMask::make(grid.nodes());
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        float v = grid.values[i];
        if (v > 0.0f && v < 1.0f) mask.bits[i] = 1;
    }
    return mask;
}

// 26-connected dilation, clipped at the grid bounds. Output always contains
// the input.
inline NodeMask dilate_1ring(const NodeMask& mask) {
    int n = mask.nodes_per_axis;
    NodeMask out = NodeMask::make(n);
    std::size_t nn = static_cast<std::size_t>(n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                std::size_t idx = static_cast<std::size_t>(i) + nn * (static_cast<std::size_t>(j) + nn * static_cast<std::size_t>(k));
                if (!mask.bits[idx]) continue;
                int k_lo = k > 0 ? k - 1 : 0, k_hi = k < n - 1 ? k + 1 : n - 1;
                int j_lo = j > 0 ? j - 1 : 0, j_hi = j < n - 1 ? j + 1 : n - 1;
                int i_lo = i > 0 ? i - 1 : 0, i_hi = i < n - 1 ? i + 1 : n - 1;
                for (int kk = k_lo; kk <= k_hi; ++kk)
                    for (int jj = j_lo; jj <= j_hi; ++jj)
                        for (int ii = i_lo; ii <= i_hi; ++ii)
                            out.bits[static_cast<std::size_t>(ii) +
                                     nn * (static_cast<std::size_t>(jj) + nn * static_cast<std::size_t>(kk))] = 1;
            }
    return out;
}

struct ArgmaxZ {
    int nodes_per_axis = 0;
    std::vector<float> max_value;  // per (i,j) column
    std::vector<int> max_index;    // smallest k attaining the maximum
};

// Maximum along each (i,j) depth column and the smallest k index attaining
// it. k=0 is nearest to the observer.
inline ArgmaxZ argmax_z(const LevelGrid& grid) {
    if (!grid.fully_assigned()) throw std::invalid_argument("argmax_z: grid has unknown nodes");
    int n = grid.nodes();
    ArgmaxZ out;
    out.nodes_per_axis = n;
    std::size_t plane = static_cast<std::size_t>(n) * n;
    out.max_value.assign(plane, 0.0f);
    out.max_index.assign(plane, 0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            std::size_t px = static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * j;
            float best = grid.values[grid.index(i, j, 0)];
            int best_k = 0;
            for (int k = 1; k < n; ++k) {
                float v = grid.values[grid.index(i, j, k)];
                if (v > best) {
                    best = v;
                    best_k = k;
                }
            }
            out.max_value[px] = best;
            out.max_index[px] = best_k;
        }
    return out;
}

// Raw debug dump: int32 level, int32 R_l, then float32 node values
// x-fastest. Little-endian.
inline void dump_grid(const LevelGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dump_grid: cannot open " + path);
    std::int32_t header[2] = {grid.level, grid.cells};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(grid.values.data()),
              static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
    if (!out) throw std::runtime_error("dump_grid: write failed for " + path);
}

inline LevelGrid load_grid_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_grid_dump: cannot open " + path);
    std::int32_t header[2];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw std::runtime_error("load_grid_dump: short header in " + path);
    LevelGrid g = LevelGrid::make(header[0], header[1], NodeState::evaluated);
    in.read(reinterpret_cast<char*>(g.values.data()),
            static_cast<std::streamsize>(g.values.size() * sizeof(float)));
    if (!in) throw std::runtime_error("load_grid_dump: short data in " + path);
    return g;
}

}  // namespace isocull
