// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "isocull/field.hpp"
#include "isocull/geom.hpp"
#include "isocull/mesh.hpp"
#include "isocull/random.hpp"

namespace isocull {

// -- SoftZ depth encoding ----------------------------------------------

// Soft one-hot encoding of a depth in [-1,1] into N bins: at most two
// adjacent nonzero entries that sum to 1.
inline std::vector<double> softz_encode(double pz, int n) {
    if (n < 2) throw std::invalid_argument("softz_encode: N must be >= 2");
    if (!(pz >= -1.0 && pz <= 1.0)) throw std::invalid_argument("softz_encode: depth out of [-1,1]");
    std::vector<double> z(n, 0.0);
    double scaled = (n - 1) * 0.5 * (pz + 1.0);
    int i0 = static_cast<int>(std::floor(scaled));
    if (i0 >= n - 1) {  // pz == +1 lands on the last bin exactly
        z[n - 1] = 1.0;
        return z;
    }
    z[i0] = 1.0 + i0 - scaled;
    z[i0 + 1] = scaled - i0;
    return z;
}

// Expectation of bin centers; exact inverse of the two-bin encoding, up to
// the [0,1] rescaling of the input.
inline double softz_decode(std::span<const double> z) {
    double acc = 0.0;
    int n = static_cast<int>(z.size());
    for (int i = 0; i < n; ++i) acc += z[i] * (static_cast<double>(i) / (n - 1));
    return acc;
}

// -- losses and point IoU ------------------------------------------------

inline constexpr double kBceEps = 1e-7;

inline double bce_loss(double prediction, int label) {
    double p = clamp(prediction, kBceEps, 1.0 - kBceEps);
    return label ? -std::log(p) : -std::log(1.0 - p);
}

inline double iou_from_points(std::span<const double> predictions, std::span<const int> labels,
                              double threshold = 0.5) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("iou_from_points: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("iou_from_points: empty input");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool p = predictions[i] >= threshold;
        bool l = labels[i] != 0;
        inter += (p && l) ? 1 : 0;
        uni += (p || l) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// -- OHEM inverse-probability machinery ------------------------------------

struct OhemParams {
    double alpha_item = 0.15;
    double beta_item = 10.0;
    double alpha_point = 0.7;
    double beta_point = 0.0;
    double bce_cap = 20.0;  // keeps point weights finite with beta_point = 0
};

inline double ohem_item_weight(double iou, double alpha_i = 0.15, double beta_i = 10.0) {
    return std::exp(-iou / alpha_i + beta_i);
}

inline double ohem_point_weight(double bce, double alpha_p = 0.7, double beta_p = 0.0,
                                double bce_cap = 20.0) {
    double capped = bce > bce_cap ? bce_cap : bce;
    return 1.0 / (std::exp(-capped / alpha_p) + beta_p);
}

// Stored inverse probabilities per item and per (item, point), overwritten
// with each visited mini-batch and normalized into sampling distributions on
// demand. Items registered before any observation start at the weight of the
// running mean IoU so they are neither starved nor favored.
class OhemState {
  public:
    explicit OhemState(OhemParams params = {}) : params_(params) {}

    void register_item(int item_id, std::size_t point_pool_size) {
        if (items_.count(item_id)) return;
        Item item;
        item.weight = ohem_item_weight(prior_iou(), params_.alpha_item, params_.beta_item);
        item.point_weights.assign(point_pool_size, 1.0);
        items_.emplace(item_id, std::move(item));
    }

    bool empty() const { return items_.empty(); }
    std::size_t item_count() const { return items_.size(); }

    double item_weight(int item_id) const { return items_.at(item_id).weight; }
    const std::vector<double>& point_weights(int item_id) const {
        return items_.at(item_id).point_weights;
    }

    // Overwrites the stored inverse probabilities for one item with the
    // latest batch results.
    void update(int item_id, double iou, std::span<const int> point_ids,
                std::span<const double> point_bce) {
        if (point_ids.size() != point_bce.size())
            throw std::invalid_argument("OhemState::update: point id/bce length mismatch");
        if (!items_.count(item_id)) register_item(item_id, 0);
        Item& item = items_.at(item_id);
        item.weight = ohem_item_weight(iou, params_.alpha_item, params_.beta_item);
        for (std::size_t i = 0; i < point_ids.size(); ++i) {
            std::size_t pid = static_cast<std::size_t>(point_ids[i]);
            if (pid >= item.point_weights.size())
                throw std::invalid_argument("OhemState::update: point id out of range");
            item.point_weights[pid] = ohem_point_weight(point_bce[i], params_.alpha_point,
                                                        params_.beta_point, params_.bce_cap);
        }
        seen_iou_sum_ += iou;
        seen_count_ += 1;
    }

    // Normalized item sampling distribution, keyed in item-id order.
    std::vector<std::pair<int, double>> item_distribution() const {
        double total = 0.0;
        for (const auto& [id, item] : items_) total += item.weight;
        std::vector<std::pair<int, double>> out;
        out.reserve(items_.size());
        for (const auto& [id, item] : items_) out.emplace_back(id, item.weight / total);
        return out;
    }

    // Draws batch_size items proportionally to their stored weights, then
    // points_per_item points within each drawn item proportionally to the
    // point weights. Deterministic for a fixed seed.
    std::vector<std::pair<int, std::vector<int>>> sample_batch(std::uint64_t seed, int batch_size,
                                                               int points_per_item) const {
        if (items_.empty()) throw std::invalid_argument("OhemState::sample_batch: empty state");
        std::vector<int> ids;
        std::vector<double> weights;
        ids.reserve(items_.size());
        for (const auto& [id, item] : items_) {
            ids.push_back(id);
            weights.push_back(item.weight);
        }
        std::vector<double> item_cdf = build_cdf(weights);
        Rng rng(seed);
        std::map<int, std::vector<double>> point_cdfs;  // built once per visited item
        std::vector<std::pair<int, std::vector<int>>> batch;
        batch.reserve(batch_size);
        for (int b = 0; b < batch_size; ++b) {
            int id = ids[sample_cdf(item_cdf, rng.uniform())];
            const Item& item = items_.at(id);
            if (item.point_weights.empty())
                throw std::invalid_argument("OhemState::sample_batch: item has no point pool");
            auto [it, inserted] = point_cdfs.try_emplace(id);
            if (inserted) it->second = build_cdf(item.point_weights);
            std::vector<int> points(points_per_item);
            for (int s = 0; s < points_per_item; ++s)
                points[s] = static_cast<int>(sample_cdf(it->second, rng.uniform()));
            batch.emplace_back(id, std::move(points));
        }
        return batch;
    }

    const OhemParams& params() const { return params_; }

  private:
    struct Item {
        double weight = 1.0;
        std::vector<double> point_weights;
    };

    double prior_iou() const { return seen_count_ > 0 ? seen_iou_sum_ / seen_count_ : 0.5; }

    OhemParams params_;
    std::map<int, Item> items_;
    double seen_iou_sum_ = 0.0;
    std::size_t seen_count_ = 0;
};

// -- importance-based point sampling ----------------------------------------

struct SamplePoint {
    Vec3 position{};
    int label = 0;        // ground-truth occupancy
    double prediction = 0.0;
    double bce = 0.0;
};

namespace detail {

// Surface point by bisecting an inside/outside segment of the occupancy
// field; uses only oracle queries.
inline Vec3 surface_point_by_bisection(const FieldOracle& oracle, Rng& rng) {
    auto draw = [&rng] { return Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}; };
    Vec3 inside, outside;
    bool found = false;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        Vec3 p = draw();
        if (oracle.occupancy(p) >= 0.5) {
            inside = p;
            found = true;
            break;
        }
    }
    if (!found) throw std::runtime_error("importance sampling: field looks empty");
    for (int attempt = 0;; ++attempt) {
        Vec3 p = draw();
        if (oracle.occupancy(p) < 0.5) {
            outside = p;
            break;
        }
        if (attempt > 100000) throw std::runtime_error("importance sampling: field looks full");
    }
    for (int it = 0; it < 80; ++it) {
        Vec3 mid = 0.5 * (inside + outside);
        if (oracle.occupancy(mid) >= 0.5)
            inside = mid;
        else
            outside = mid;
    }
    return 0.5 * (inside + outside);
}

}  // namespace detail

// ceil(n*(1-u)) surface samples perturbed by isotropic Gaussian noise of
// std sigma, plus floor(n*u) uniform samples in the cube; labels from the
// oracle's binarized occupancy. Positions are clamped to [-1,1]^3.
inline std::vector<SamplePoint> importance_sample_points(const FieldOracle& oracle, int n,
                                                         double sigma, double uniform_fraction,
                                                         std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("importance_sample_points: n must be >= 1");
    int n_uniform = static_cast<int>(std::floor(n * uniform_fraction));
    int n_surface = n - n_uniform;
    Rng rng(seed);
    std::vector<SamplePoint> out;
    out.reserve(n);
    for (int s = 0; s < n_surface; ++s) {
        Vec3 p = detail::surface_point_by_bisection(oracle, rng);
        p = p + Vec3{sigma * rng.normal(), sigma * rng.normal(), sigma * rng.normal()};
        p = {clamp(p.x, -1, 1), clamp(p.y, -1, 1), clamp(p.z, -1, 1)};
        out.push_back({p, oracle.occupancy(p) >= 0.5 ? 1 : 0, 0.0, 0.0});
    }
    for (int s = 0; s < n_uniform; ++s) {
        Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        out.push_back({p, oracle.occupancy(p) >= 0.5 ? 1 : 0, 0.0, 0.0});
    }
    return out;
}

// Mesh-backed variant: surface samples come from area-weighted triangle
// sampling; labels still come from the oracle.
inline std::vector<SamplePoint> importance_sample_points(const TriangleMesh& mesh,
                                                         const FieldOracle& oracle, int n,
                                                         double sigma, double uniform_fraction,
                                                         std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("importance_sample_points: n must be >= 1");
    int n_uniform = static_cast<int>(std::floor(n * uniform_fraction));
    int n_surface = n - n_uniform;
    SurfaceSamples surf = sample_surface(mesh, std::max(n_surface, 1), seed);
    Rng rng(seed ^ 0x5eedf00dull);
    std::vector<SamplePoint> out;
    out.reserve(n);
    for (int s = 0; s < n_surface; ++s) {
        Vec3 p = surf.points[s] + Vec3{sigma * rng.normal(), sigma * rng.normal(), sigma * rng.normal()};
        p = {clamp(p.x, -1, 1), clamp(p.y, -1, 1), clamp(p.z, -1, 1)};
        out.push_back({p, oracle.occupancy(p) >= 0.5 ? 1 : 0, 0.0, 0.0});
    }
    for (int s = 0; s < n_uniform; ++s) {
        Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        out.push_back({p, oracle.occupancy(p) >= 0.5 ? 1 : 0, 0.0, 0.0});
    }
    return out;
}

}  // namespace isocull
