// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "isocull/geom.hpp"
#include "isocull/parallel.hpp"
#include "isocull/scene.hpp"

namespace isocull {

// Continuous occupancy field O(P) in [0,1] (0.5-level set is the surface)
// with an optional texture field T(P) in [0,1]^3. Every occupancy evaluation
// bumps the call counter, which is what all acceleration factors are
// measured from. Evaluators are deterministic and safe to call from several
// workers at once.
class FieldOracle {
  public:
    using OccupancyFn = std::function<double(const Vec3&)>;
    using TextureFn = std::function<Vec3(const Vec3&)>;

    explicit FieldOracle(OccupancyFn occupancy, TextureFn texture = nullptr)
        : occupancy_(std::move(occupancy)), texture_(std::move(texture)) {
        if (!occupancy_) throw std::invalid_argument("FieldOracle: null occupancy evaluator");
    }

    FieldOracle(const FieldOracle&) = delete;
    FieldOracle& operator=(const FieldOracle&) = delete;

    double occupancy(const Vec3& p) const {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return occupancy_(p);
    }

    // One value per point, order preserving; counter += points.size().
    std::vector<double> occupancy_batch(std::span<const Vec3> points, int workers = 1) const {
        calls_.fetch_add(points.size(), std::memory_order_relaxed);
        std::vector<double> out(points.size());
        parallel_for(points.size(), workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) out[i] = occupancy_(points[i]);
        });
        return out;
    }

    bool has_texture() const { return static_cast<bool>(texture_); }

    Vec3 texture(const Vec3& p) const {
        require_texture();
        return texture_(p);
    }

    std::vector<Vec3> texture_batch(std::span<const Vec3> points, int workers = 1) const {
        require_texture();
        std::vector<Vec3> out(points.size());
        parallel_for(points.size(), workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) out[i] = texture_(points[i]);
        });
        return out;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
    void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

  private:
    void require_texture() const {
        if (!texture_) throw std::invalid_argument("FieldOracle: scene has no texture");
    }

    OccupancyFn occupancy_;
    TextureFn texture_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

// O(P) = 1 / (1 + exp(d(P)/tau)), d the CSG signed distance (negative
// inside). exp overflow saturates cleanly to 0.
inline double occupancy_from_distance(double d, double tau) { return 1.0 / (1.0 + std::exp(d / tau)); }

inline FieldOracle build_oracle(const SceneSpec& scene) {
    validate_scene(scene);
    FieldOracle::OccupancyFn occ = [scene](const Vec3& p) {
        return occupancy_from_distance(scene.signed_distance(p), scene.tau);
    };
    FieldOracle::TextureFn tex;
    if (scene.has_texture()) tex = [scene](const Vec3& p) { return scene.texture_color(p); };
    return FieldOracle(std::move(occ), std::move(tex));
}

}  // namespace isocull
