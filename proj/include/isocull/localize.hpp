// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isocull/field.hpp"
#include "isocull/grid.hpp"

namespace isocull {

enum class Variant { brute, octree_binarized, octree_threshold, progressive };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::brute: return "brute";
        case Variant::octree_binarized: return "octree_binarized";
        case Variant::octree_threshold: return "octree_threshold";
        case Variant::progressive: return "progressive";
    }
    return "?";
}

inline Variant variant_from_name(const std::string& name) {
    if (name == "brute") return Variant::brute;
    if (name == "octree_binarized") return Variant::octree_binarized;
    if (name == "octree_threshold") return Variant::octree_threshold;
    if (name == "progressive") return Variant::progressive;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

struct AlgoConfig {
    Variant variant = Variant::progressive;
    double threshold = 0.0;       // octree_threshold only, in (0, 0.5)
    int coarsest_cells = 16;      // R_0
    int target_level = 3;         // L; target resolution R_0 * 2^L cells
    int max_conflict_iters = 0;   // 0 = one axis length per level
    bool conflict_pass = true;    // progressive only; off = ablation

    int target_cells() const { return coarsest_cells << target_level; }
};

inline void validate_config(const AlgoConfig& cfg) {
    if (cfg.coarsest_cells < 2) throw std::invalid_argument("config: coarsest cells must be >= 2");
    if (cfg.target_level < 0) throw std::invalid_argument("config: target level must be >= 0");
    if (cfg.target_cells() > 1024)
        throw std::invalid_argument("config: target resolution exceeds 1024 cells per axis");
    if (cfg.variant == Variant::octree_threshold &&
        !(cfg.threshold > 0.0 && cfg.threshold < 0.5))
        throw std::invalid_argument("config: threshold must lie in (0, 0.5)");
}

struct ExtractionResult {
    LevelGrid grid;                         // scalar values + node states at level L
    std::vector<std::uint8_t> binarized;    // one byte per node, v >= 0.5
    std::vector<std::uint64_t> evals_per_level;
    std::uint64_t total_evals = 0;
    double wall_seconds = 0.0;
    bool conflict_warning = false;          // conflict pass hit its iteration bound
};

namespace detail {

inline void decompose(std::size_t idx, int nodes, int& i, int& j, int& k) {
    std::size_t n = static_cast<std::size_t>(nodes);
    i = static_cast<int>(idx % n);
    j = static_cast<int>((idx / n) % n);
    k = static_cast<int>(idx / (n * n));
}

// Evaluates the listed nodes with the oracle and overwrites their values.
inline std::uint64_t evaluate_nodes(const FieldOracle& oracle, LevelGrid& grid,
                                    std::span<const std::size_t> node_indices, int workers) {
    std::vector<Vec3> pts(node_indices.size());
    for (std::size_t t = 0; t < node_indices.size(); ++t) {
        int i, j, k;
        decompose(node_indices[t], grid.nodes(), i, j, k);
        pts[t] = grid.node_position(i, j, k);
    }
    std::vector<double> vals = oracle.occupancy_batch(pts, workers);
    for (std::size_t t = 0; t < node_indices.size(); ++t) {
        grid.values[node_indices[t]] = static_cast<float>(vals[t]);
        grid.states[node_indices[t]] = NodeState::evaluated;
    }
    return node_indices.size();
}

// Full evaluation of every node, without materializing a point list.
inline std::uint64_t evaluate_full(const FieldOracle& oracle, LevelGrid& grid, int workers) {
    std::size_t count = grid.node_count();
    parallel_for(count, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            int i, j, k;
            decompose(idx, grid.nodes(), i, j, k);
            grid.values[idx] = static_cast<float>(oracle.occupancy(grid.node_position(i, j, k)));
            grid.states[idx] = NodeState::evaluated;
        }
    });
    return count;
}

// Fine working grid for one refinement step: even-index nodes keep the
// coarse scalar value and state, everything else takes the tentative value
// (interpolation of the binarized coarse grid for the progressive and
// binarized-octree variants).
inline LevelGrid carry_scalars(const LevelGrid& coarse, const LevelGrid& tentative) {
    LevelGrid fine = tentative;
    int cn = coarse.nodes();
    for (int ck = 0; ck < cn; ++ck)
        for (int cj = 0; cj < cn; ++cj)
            for (int ci = 0; ci < cn; ++ci) {
                std::size_t fi = fine.index(2 * ci, 2 * cj, 2 * ck);
                std::size_t cidx = coarse.index(ci, cj, ck);
                fine.values[fi] = coarse.values[cidx];
                fine.states[fi] = coarse.states[cidx];
            }
    return fine;
}

inline std::vector<std::size_t> mask_to_unevaluated_list(const NodeMask& mask, const LevelGrid& grid) {
    std::vector<std::size_t> out;
    for (std::size_t idx = 0; idx < mask.bits.size(); ++idx)
        if (mask.bits[idx] && grid.states[idx] != NodeState::evaluated) out.push_back(idx);
    return out;
}

// Fine nodes covered by marked coarse cells, deduplicated, unevaluated only.
inline std::vector<std::size_t> cell_nodes_to_evaluate(const std::vector<std::uint8_t>& cell_marks,
                                                       int coarse_cells, const LevelGrid& fine) {
    std::vector<std::uint8_t> queued(fine.node_count(), 0);
    std::vector<std::size_t> out;
    std::size_t cc = static_cast<std::size_t>(coarse_cells);
    for (int ck = 0; ck < coarse_cells; ++ck)
        for (int cj = 0; cj < coarse_cells; ++cj)
            for (int ci = 0; ci < coarse_cells; ++ci) {
                std::size_t cell = static_cast<std::size_t>(ci) + cc * (static_cast<std::size_t>(cj) + cc * static_cast<std::size_t>(ck));
                if (!cell_marks[cell]) continue;
                for (int dk = 0; dk <= 2; ++dk)
                    for (int dj = 0; dj <= 2; ++dj)
                        for (int di = 0; di <= 2; ++di) {
                            std::size_t fi = fine.index(2 * ci + di, 2 * cj + dj, 2 * ck + dk);
                            if (queued[fi] || fine.states[fi] == NodeState::evaluated) continue;
                            queued[fi] = 1;
                            out.push_back(fi);
                        }
            }
    return out;
}

inline std::vector<std::uint8_t> binarized_volume(const LevelGrid& grid) {
    std::vector<std::uint8_t> out(grid.node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid.values[i] >= 0.5f ? 1 : 0;
    return out;
}

inline void collect_unevaluated_neighbors(const LevelGrid& grid, std::size_t idx,
                                          std::vector<std::uint8_t>& queued,
                                          std::vector<std::size_t>& out) {
    int i, j, k;
    decompose(idx, grid.nodes(), i, j, k);
    int n = grid.nodes();
    for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                if (di == 0 && dj == 0 && dk == 0) continue;
                int ii = i + di, jj = j + dj, kk = k + dk;
                if (ii < 0 || jj < 0 || kk < 0 || ii >= n || jj >= n || kk >= n) continue;
                std::size_t nb = grid.index(ii, jj, kk);
                if (queued[nb] || grid.states[nb] == NodeState::evaluated) continue;
                queued[nb] = 1;
                out.push_back(nb);
            }
}

}  // namespace detail

inline ExtractionResult extract_brute_force(const FieldOracle& oracle, const AlgoConfig& cfg,
                                            int workers = 1) {
    validate_config(cfg);
    auto t0 = std::chrono::steady_clock::now();
    ExtractionResult result;
    result.evals_per_level.assign(cfg.target_level + 1, 0);
    result.grid = LevelGrid::make(cfg.target_level, cfg.target_cells());
    result.evals_per_level[cfg.target_level] = detail::evaluate_full(oracle, result.grid, workers);
    result.total_evals = result.evals_per_level[cfg.target_level];
    result.binarized = detail::binarized_volume(result.grid);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Classic binarized-octree refinement: after binarizing the current level,
// only cells touching an inside/outside interface are subdivided (interface
// means a node whose 6-neighborhood crosses the binarized value). Fine nodes
// outside subdivided cells inherit interpolated-then-binarized values.
inline ExtractionResult extract_octree_binarized(const FieldOracle& oracle, const AlgoConfig& cfg,
                                                 int workers = 1) {
    validate_config(cfg);
    auto t0 = std::chrono::steady_clock::now();
    ExtractionResult result;
    result.evals_per_level.assign(cfg.target_level + 1, 0);

    LevelGrid grid = LevelGrid::make(0, cfg.coarsest_cells);
    result.evals_per_level[0] = detail::evaluate_full(oracle, grid, workers);

    for (int l = 1; l <= cfg.target_level; ++l) {
        LevelGrid bin = binarize(grid);
        int cn = grid.nodes();
        int cc = grid.cells;

        // interface nodes in the binarized coarse grid
        std::vector<std::uint8_t> interface_node(grid.node_count(), 0);
        static const int steps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (int k = 0; k < cn; ++k)
            for (int j = 0; j < cn; ++j)
                for (int i = 0; i < cn; ++i) {
                    float v = bin.values[bin.index(i, j, k)];
                    for (const auto& s : steps) {
                        int ii = i + s[0], jj = j + s[1], kk = k + s[2];
                        if (ii < 0 || jj < 0 || kk < 0 || ii >= cn || jj >= cn || kk >= cn) continue;
                        if (bin.values[bin.index(ii, jj, kk)] != v) {
                            interface_node[bin.index(i, j, k)] = 1;
                            break;
                        }
                    }
                }

        std::vector<std::uint8_t> cell_marks(static_cast<std::size_t>(cc) * cc * cc, 0);
        for (int ck = 0; ck < cc; ++ck)
            for (int cj = 0; cj < cc; ++cj)
                for (int ci = 0; ci < cc; ++ci) {
                    bool mark = false;
                    for (int dk = 0; dk <= 1 && !mark; ++dk)
                        for (int dj = 0; dj <= 1 && !mark; ++dj)
                            for (int di = 0; di <= 1 && !mark; ++di)
                                mark = interface_node[grid.index(ci + di, cj + dj, ck + dk)] != 0;
                    if (mark)
                        cell_marks[static_cast<std::size_t>(ci) +
                                   static_cast<std::size_t>(cc) * (static_cast<std::size_t>(cj) +
                                                                   static_cast<std::size_t>(cc) * static_cast<std::size_t>(ck))] = 1;
                }

        LevelGrid tent = upsample_interpolate(bin);
        for (float& v : tent.values) v = binarize_value(v);  // inherit interpolated-then-binarized
        LevelGrid fine = detail::carry_scalars(grid, tent);

        std::vector<std::size_t> to_eval = detail::cell_nodes_to_evaluate(cell_marks, cc, fine);
        result.evals_per_level[l] += detail::evaluate_nodes(oracle, fine, to_eval, workers);
        grid = std::move(fine);
    }

    for (std::uint64_t e : result.evals_per_level) result.total_evals += e;
    result.binarized = detail::binarized_volume(grid);
    result.grid = std::move(grid);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Threshold-octree refinement on continuous values: a cell is subdivided iff
// the spread of its corner values (max pairwise absolute deviation) exceeds
// the threshold. Unrefined regions fill by trilinear interpolation.
inline ExtractionResult extract_octree_threshold(const FieldOracle& oracle, const AlgoConfig& cfg,
                                                 int workers = 1) {
    validate_config(cfg);
    auto t0 = std::chrono::steady_clock::now();
    ExtractionResult result;
    result.evals_per_level.assign(cfg.target_level + 1, 0);

    LevelGrid grid = LevelGrid::make(0, cfg.coarsest_cells);
    result.evals_per_level[0] = detail::evaluate_full(oracle, grid, workers);

    for (int l = 1; l <= cfg.target_level; ++l) {
        int cc = grid.cells;
        std::vector<std::uint8_t> cell_marks(static_cast<std::size_t>(cc) * cc * cc, 0);
        for (int ck = 0; ck < cc; ++ck)
            for (int cj = 0; cj < cc; ++cj)
                for (int ci = 0; ci < cc; ++ci) {
                    float lo = 1.0f, hi = 0.0f;
                    for (int dk = 0; dk <= 1; ++dk)
                        for (int dj = 0; dj <= 1; ++dj)
                            for (int di = 0; di <= 1; ++di) {
                                float v = grid.values[grid.index(ci + di, cj + dj, ck + dk)];
                                lo = std::min(lo, v);
                                hi = std::max(hi, v);
                            }
                    if (hi - lo > cfg.threshold)
                        cell_marks[static_cast<std::size_t>(ci) +
                                   static_cast<std::size_t>(cc) * (static_cast<std::size_t>(cj) +
                                                                   static_cast<std::size_t>(cc) * static_cast<std::size_t>(ck))] = 1;
                }

        LevelGrid fine = upsample_interpolate(grid);
        std::vector<std::size_t> to_eval = detail::cell_nodes_to_evaluate(cell_marks, cc, fine);
        result.evals_per_level[l] += detail::evaluate_nodes(oracle, fine, to_eval, workers);
        grid = std::move(fine);
    }

    for (std::uint64_t e : result.evals_per_level) result.total_evals += e;
    result.binarized = detail::binarized_volume(grid);
    result.grid = std::move(grid);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Progressive surface localization. Per level: binarize the coarse
// prediction and upsample it, flag the fractional nodes as boundary
// candidates, dilate by one ring, evaluate the flagged nodes, then run the
// conflict pass: any newly evaluated node whose binarized oracle value
// disagrees with its binarized interpolated value signals a missed surface
// region, so its unevaluated 1-ring neighborhood is evaluated too, repeated
// until no new conflicts appear (or the iteration bound trips).
inline ExtractionResult extract_progressive(const FieldOracle& oracle, const AlgoConfig& cfg,
                                            int workers = 1) {
    validate_config(cfg);
    auto t0 = std::chrono::steady_clock::now();
    ExtractionResult result;
    result.evals_per_level.assign(cfg.target_level + 1, 0);

    LevelGrid grid = LevelGrid::make(0, cfg.coarsest_cells);
    result.evals_per_level[0] = detail::evaluate_full(oracle, grid, workers);

    for (int l = 1; l <= cfg.target_level; ++l) {
        LevelGrid bin = binarize(grid);
        LevelGrid tent = upsample_interpolate(bin);
        NodeMask flagged = dilate_1ring(boundary_candidates(tent));
        LevelGrid fine = detail::carry_scalars(grid, tent);

        std::vector<std::size_t> to_eval = detail::mask_to_unevaluated_list(flagged, fine);
        result.evals_per_level[l] += detail::evaluate_nodes(oracle, fine, to_eval, workers);

        std::vector<std::uint8_t> queued(fine.node_count(), 0);
        std::vector<std::size_t> newly = cfg.conflict_pass ? std::move(to_eval)
                                                           : std::vector<std::size_t>{};
        int max_iters = cfg.max_conflict_iters > 0 ? cfg.max_conflict_iters : fine.cells;
        for (int iter = 0;; ++iter) {
            std::vector<std::size_t> conflicts;
            for (std::size_t idx : newly)
                if (binarize_value(fine.values[idx]) != binarize_value(tent.values[idx]))
                    conflicts.push_back(idx);
            if (conflicts.empty()) break;
            if (iter >= max_iters) {
                result.conflict_warning = true;
                break;
            }
            std::vector<std::size_t> next;
            for (std::size_t idx : conflicts)
                detail::collect_unevaluated_neighbors(fine, idx, queued, next);
            if (next.empty()) break;
            result.evals_per_level[l] += detail::evaluate_nodes(oracle, fine, next, workers);
            newly = std::move(next);
        }
        grid = std::move(fine);
    }

    for (std::uint64_t e : result.evals_per_level) result.total_evals += e;
    result.binarized = detail::binarized_volume(grid);
    result.grid = std::move(grid);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

inline ExtractionResult extract(const FieldOracle& oracle, const AlgoConfig& cfg, int workers = 1) {
    switch (cfg.variant) {
        case Variant::brute: return extract_brute_force(oracle, cfg, workers);
        case Variant::octree_binarized: return extract_octree_binarized(oracle, cfg, workers);
        case Variant::octree_threshold: return extract_octree_threshold(oracle, cfg, workers);
        case Variant::progressive: return extract_progressive(oracle, cfg, workers);
    }
    throw std::invalid_argument("extract: bad variant");
}

// Intersection over union of two binary node volumes; 1.0 when both are
// empty.
inline double compare_iou(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("compare_iou: dimension mismatch");
    std::uint64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool av = a[i] != 0, bv = b[i] != 0;
        inter += (av && bv) ? 1 : 0;
        uni += (av || bv) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double acceleration_factor(const ExtractionResult& result, const ExtractionResult& brute) {
    if (result.total_evals == 0 || brute.total_evals == 0)
        throw std::invalid_argument("acceleration_factor: zero evaluation count");
    return static_cast<double>(brute.total_evals) / static_cast<double>(result.total_evals);
}

}  // namespace isocull
