// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "isocull/field.hpp"
#include "isocull/grid.hpp"
#include "isocull/localize.hpp"

namespace isocull {

// Rigid world->view map plus an optional weak-perspective scale on x,y.
// View space follows the grid convention: higher z is closer to the
// observer.
struct CameraSpec {
    Mat3 rotation = Mat3::identity();
    Vec3 translation{};
    double scale = 1.0;  // 1.0 = orthographic

    Vec3 world_to_view(const Vec3& w) const {
        Vec3 v = rotation.apply(w) + translation;
        return {scale * v.x, scale * v.y, v.z};
    }

    Vec3 view_to_world(const Vec3& p) const {
        Vec3 v{p.x / scale, p.y / scale, p.z};
        return rotation.transposed().apply(v - translation);
    }

    // Angles in degrees, normalized so full turns reproduce the identity
    // exactly. dist shifts the scene away from the observer along view z.
    static CameraSpec from_angles(double yaw_deg, double pitch_deg, double dist = 0.0,
                                  double scale = 1.0) {
        CameraSpec cam;
        double yaw = std::fmod(yaw_deg, 360.0);
        double pitch = std::fmod(pitch_deg, 360.0);
        cam.rotation = Mat3::rotation_x(deg_to_rad(pitch)) * Mat3::rotation_y(deg_to_rad(yaw));
        cam.translation = {0.0, 0.0, -dist};
        cam.scale = scale;
        return cam;
    }
};

// Pixel (0,0) is the image top-left, i.e. view NDC (x=-1, y=+1); one pixel
// per x/y grid node, so width = height = R_L + 1.
struct RenderedImage {
    int width = 0, height = 0;
    std::vector<Vec3> rgb;
    std::vector<double> depth;       // view z in [-1,1] where mask is set, else -2
    std::vector<std::uint8_t> mask;
    Vec3 background{};
    std::uint64_t oracle_calls = 0;
    int degenerate_brackets = 0;     // equal-occupancy brackets clamped to the occupied node
    int grazing_pixels = 0;          // columns with fractional values that never reach 0.5
};

struct DepthMap {
    int width = 0, height = 0;
    std::vector<double> depth;
    std::vector<std::uint8_t> mask;
    std::uint64_t oracle_calls = 0;
    int degenerate_brackets = 0;
    int grazing_pixels = 0;
};

namespace detail {

constexpr double kInvalidDepth = -2.0;

struct DepthPass {
    LevelGrid grid;            // level-L working grid, scalars where evaluated
    std::vector<double> depth;  // per (i,j) grid column, x-fastest
    std::vector<std::uint8_t> covered;
    std::vector<int> surface_k;  // final i_max per covered column
    std::uint64_t oracle_calls = 0;
    int degenerate_brackets = 0;
    int grazing_pixels = 0;
};

// Mesh-free surface localization in view space: progressive localization up
// to level L-1, upsample of the binarized prediction, argmax along z,
// shadow-node culling behind confidently covered pixels, evaluation of the
// surviving boundary candidates, then per-pixel surface depth by occupancy
// interpolation between the two bracketing nodes.
inline DepthPass depth_pass(const FieldOracle& oracle, const CameraSpec& camera,
                            const AlgoConfig& cfg, int workers) {
    if (cfg.variant != Variant::progressive)
        throw std::invalid_argument("render: config variant must be progressive");
    if (cfg.target_level < 1)
        throw std::invalid_argument("render: target level must be >= 1");
    validate_config(cfg);

    std::uint64_t calls_before = oracle.calls();
    FieldOracle view_field(
        [&oracle, camera](const Vec3& p) { return oracle.occupancy(camera.view_to_world(p)); });

    AlgoConfig sub = cfg;
    sub.target_level = cfg.target_level - 1;
    ExtractionResult prog = extract_progressive(view_field, sub, workers);

    LevelGrid tent;
    {
        LevelGrid bin = binarize(prog.grid);
        tent = upsample_interpolate(bin);
    }
    LevelGrid fine = detail::carry_scalars(prog.grid, tent);
    int n = fine.nodes();
    int cells = fine.cells;
    std::size_t plane = static_cast<std::size_t>(n) * n;

    // First argmax on the tentative (upsampled binarized) values; columns
    // with O_max exactly 1 get everything behind the first hit marked as
    // shadow.
    ArgmaxZ first = argmax_z(tent);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            std::size_t px = static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * j;
            if (first.max_value[px] != 1.0f) continue;
            for (int k = first.max_index[px] + 1; k < n; ++k) {
                std::size_t idx = fine.index(i, j, k);
                if (fine.states[idx] != NodeState::evaluated) fine.states[idx] = NodeState::shadow;
            }
        }

    // Evaluate the surviving boundary candidates (fractional tentative
    // value, not already evaluated, not shadowed).
    std::vector<std::size_t> to_eval;
    for (std::size_t idx = 0; idx < fine.node_count(); ++idx) {
        float v = tent.values[idx];
        if (v > 0.0f && v < 1.0f && fine.states[idx] == NodeState::interpolated)
            to_eval.push_back(idx);
    }
    detail::evaluate_nodes(view_field, fine, to_eval, workers);

    // Second argmax on the binarized updated values.
    ArgmaxZ final_pass;
    {
        LevelGrid bin = fine;
        for (float& v : bin.values) v = binarize_value(v);
        for (NodeState& s : bin.states) s = NodeState::evaluated;  // argmax wants full assignment
        final_pass = argmax_z(bin);
    }

    DepthPass out;
    out.depth.assign(plane, kInvalidDepth);
    out.covered.assign(plane, 0);
    out.surface_k.assign(plane, -1);

    // Brackets occasionally land on nodes that were never evaluated (copies
    // of interpolated coarse nodes); gather and evaluate them in one batch
    // so the per-pixel pass stays read-only.
    std::vector<std::size_t> bracket_eval;
    {
        std::vector<std::uint8_t> queued(fine.node_count(), 0);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                std::size_t px = static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * j;
                if (final_pass.max_value[px] != 1.0f) continue;
                int k1 = final_pass.max_index[px];
                for (int k = std::max(0, k1 - 1); k <= k1; ++k) {
                    std::size_t idx = fine.index(i, j, k);
                    if (fine.states[idx] != NodeState::evaluated && !queued[idx]) {
                        queued[idx] = 1;
                        bracket_eval.push_back(idx);
                    }
                }
            }
    }
    detail::evaluate_nodes(view_field, fine, bracket_eval, workers);

    std::vector<int> degenerate(plane, 0), grazing(plane, 0);
    parallel_for(plane, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t px = b; px < e; ++px) {
            int i = static_cast<int>(px % n);
            int j = static_cast<int>(px / n);
            if (final_pass.max_value[px] != 1.0f) {
                for (int k = 0; k < n; ++k) {
                    float v = fine.values[fine.index(i, j, k)];
                    if (v > 0.0f && v < 1.0f) {
                        grazing[px] = 1;
                        break;
                    }
                }
                continue;
            }
            int k1 = final_pass.max_index[px];
            double s = 1.0;
            if (k1 > 0) {
                double v1 = fine.values[fine.index(i, j, k1)];
                double v0 = fine.values[fine.index(i, j, k1 - 1)];
                double denom = v1 - v0;
                if (denom > 0.0) {
                    s = clamp((0.5 - v0) / denom, 0.0, 1.0);
                } else {
                    degenerate[px] = 1;
                }
            }
            out.covered[px] = 1;
            out.surface_k[px] = k1;
            out.depth[px] = 1.0 - 2.0 * (static_cast<double>(k1) - 1.0 + s) / cells;
        }
    });

    for (std::size_t px = 0; px < plane; ++px) {
        out.degenerate_brackets += degenerate[px];
        out.grazing_pixels += grazing[px];
    }
    out.grid = std::move(fine);
    out.oracle_calls = oracle.calls() - calls_before;
    return out;
}

}  // namespace detail

inline DepthMap surface_depth_map(const FieldOracle& oracle, const CameraSpec& camera,
                                  const AlgoConfig& cfg, int workers = 1) {
    detail::DepthPass pass = detail::depth_pass(oracle, camera, cfg, workers);
    int n = pass.grid.nodes();
    DepthMap map;
    map.width = n;
    map.height = n;
    map.depth.assign(static_cast<std::size_t>(n) * n, detail::kInvalidDepth);
    map.mask.assign(static_cast<std::size_t>(n) * n, 0);
    for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col) {
            std::size_t px = static_cast<std::size_t>(col) + static_cast<std::size_t>(n) * row;
            std::size_t grid_px =
                static_cast<std::size_t>(col) + static_cast<std::size_t>(n) * (n - 1 - row);
            map.depth[px] = pass.depth[grid_px];
            map.mask[px] = pass.covered[grid_px];
        }
    map.oracle_calls = pass.oracle_calls;
    map.degenerate_brackets = pass.degenerate_brackets;
    map.grazing_pixels = pass.grazing_pixels;
    return map;
}

// Novel-view image: covered pixels take the texture field at the localized
// surface point, everything else takes the background color.
inline RenderedImage render_view(const FieldOracle& oracle, const CameraSpec& camera,
                                 const AlgoConfig& cfg, const Vec3& background = {0, 0, 0},
                                 int workers = 1) {
    if (!oracle.has_texture()) throw std::invalid_argument("render_view: scene has no texture");
    detail::DepthPass pass = detail::depth_pass(oracle, camera, cfg, workers);
    int n = pass.grid.nodes();
    int cells = pass.grid.cells;
    std::size_t plane = static_cast<std::size_t>(n) * n;

    RenderedImage img;
    img.width = n;
    img.height = n;
    img.background = background;
    img.rgb.assign(plane, background);
    img.depth.assign(plane, detail::kInvalidDepth);
    img.mask.assign(plane, 0);
    img.oracle_calls = pass.oracle_calls;
    img.degenerate_brackets = pass.degenerate_brackets;
    img.grazing_pixels = pass.grazing_pixels;

    parallel_for(plane, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t px = b; px < e; ++px) {
            int col = static_cast<int>(px % n);
            int row = static_cast<int>(px / n);
            std::size_t grid_px =
                static_cast<std::size_t>(col) + static_cast<std::size_t>(n) * (n - 1 - row);
            if (!pass.covered[grid_px]) continue;
            double x = -1.0 + 2.0 * col / cells;
            double y = -1.0 + 2.0 * (n - 1 - row) / cells;
            Vec3 view_point{x, y, pass.depth[grid_px]};
            img.rgb[px] = clamp01(oracle.texture(camera.view_to_world(view_point)));
            img.depth[px] = pass.depth[grid_px];
            img.mask[px] = 1;
        }
    });
    return img;
}

// Per-pixel selection: covered pixels from the rendering, the rest from the
// backdrop.
inline std::vector<Vec3> composite(const RenderedImage& image, std::span<const Vec3> backdrop) {
    if (backdrop.size() != image.rgb.size())
        throw std::invalid_argument("composite: dimension mismatch");
    std::vector<Vec3> out(backdrop.begin(), backdrop.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (image.mask[i]) out[i] = image.rgb[i];
    return out;
}

}  // namespace isocull
