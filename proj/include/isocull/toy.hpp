// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "isocull/random.hpp"
#include "isocull/sampling.hpp"

namespace isocull {

// Desk-scale 2D occupancy-fitting setup used to demonstrate the effect of
// the OHEM sampler: a pile of easy items plus a few hard ones, one shared
// predictor, per-cluster IoU reporting. Cluster labels exist for reporting
// only and are never shown to the sampler.

struct ToyPoint {
    double x = 0.0, y = 0.0;
    int label = 0;
};

struct ToyItem {
    std::string id;
    std::string cluster;
    std::vector<ToyPoint> pool;
};

struct ToyDataset {
    std::string name = "toy";
    std::vector<ToyItem> items;
    std::vector<std::string> clusters;  // in first-seen order
};

namespace detail {

struct ToyShape {
    std::string kind;  // "disc" or "cross"
    double cx = 0, cy = 0;
    double radius = 0;
    double arm_halflen = 0, arm_halfwidth = 0;
    double box = 0.1;  // half extent of the per-item sampling window

    bool inside(double x, double y) const {
        double dx = x - cx, dy = y - cy;
        if (kind == "disc") return dx * dx + dy * dy <= radius * radius;
        return (std::abs(dx) <= arm_halflen && std::abs(dy) <= arm_halfwidth) ||
               (std::abs(dx) <= arm_halfwidth && std::abs(dy) <= arm_halflen);
    }
};

}  // namespace detail

inline ToyDataset load_toy_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("toy dataset: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("toy dataset: bad JSON in " + path + ": " + e.what());
    }
    ToyDataset ds;
    ds.name = j.value("name", "toy");
    int points_per_item = j.value("points_per_item", 1024);
    std::uint64_t pool_seed = j.value("pool_seed", std::uint64_t{7});
    std::map<std::string, bool> seen_cluster;
    std::size_t item_index = 0;
    for (const auto& ij : j.at("items")) {
        detail::ToyShape shape;
        shape.kind = ij.at("shape").get<std::string>();
        if (shape.kind != "disc" && shape.kind != "cross")
            throw std::invalid_argument("toy dataset: unknown shape '" + shape.kind + "'");
        shape.cx = ij.at("center")[0].get<double>();
        shape.cy = ij.at("center")[1].get<double>();
        shape.radius = ij.value("radius", 0.0);
        shape.arm_halflen = ij.value("arm_halflen", 0.0);
        shape.arm_halfwidth = ij.value("arm_halfwidth", 0.0);
        shape.box = ij.value("box", 0.1);

        ToyItem item;
        item.id = ij.at("id").get<std::string>();
        item.cluster = ij.at("cluster").get<std::string>();
        if (!seen_cluster.count(item.cluster)) {
            seen_cluster[item.cluster] = true;
            ds.clusters.push_back(item.cluster);
        }
        Rng rng(pool_seed * 1000003 + item_index);
        item.pool.reserve(points_per_item);
        for (int s = 0; s < points_per_item; ++s) {
            double x = rng.uniform(shape.cx - shape.box, shape.cx + shape.box);
            double y = rng.uniform(shape.cy - shape.box, shape.cy + shape.box);
            item.pool.push_back({x, y, shape.inside(x, y) ? 1 : 0});
        }
        ds.items.push_back(std::move(item));
        ++item_index;
    }
    if (ds.items.empty()) throw std::invalid_argument("toy dataset: no items");
    return ds;
}

// Fixed-architecture predictor: 2 -> 32 -> 32 -> 1, tanh hidden units,
// sigmoid output, plain SGD on BCE.
class ToyMlp {
  public:
    static constexpr int kWidth = 32;

    explicit ToyMlp(std::uint64_t seed) {
        Rng rng(seed);
        auto init = [&rng](std::vector<double>& w, int fan_in, int fan_out) {
            double a = std::sqrt(6.0 / (fan_in + fan_out));
            for (double& v : w) v = rng.uniform(-a, a);
        };
        w1_.assign(kWidth * 2, 0.0);
        b1_.assign(kWidth, 0.0);
        w2_.assign(kWidth * kWidth, 0.0);
        b2_.assign(kWidth, 0.0);
        w3_.assign(kWidth, 0.0);
        init(w1_, 2, kWidth);
        init(w2_, kWidth, kWidth);
        init(w3_, kWidth, 1);
    }

    double predict(double x, double y) const {
        double h1[kWidth], h2[kWidth];
        forward(x, y, h1, h2);
        return output(h2);
    }

    // One SGD step on the mean BCE of the batch; returns per-point BCE.
    std::vector<double> train_step(std::span<const ToyPoint> batch, double lr) {
        std::vector<double> g_w1(w1_.size(), 0.0), g_b1(b1_.size(), 0.0);
        std::vector<double> g_w2(w2_.size(), 0.0), g_b2(b2_.size(), 0.0);
        std::vector<double> g_w3(w3_.size(), 0.0);
        double g_b3 = 0.0;
        std::vector<double> losses(batch.size());

        for (std::size_t s = 0; s < batch.size(); ++s) {
            double h1[kWidth], h2[kWidth];
            forward(batch[s].x, batch[s].y, h1, h2);
            double p = output(h2);
            losses[s] = bce_loss(p, batch[s].label);

            // d(BCE)/d(logit) for a sigmoid output
            double dz = p - batch[s].label;
            double d2[kWidth];
            for (int i = 0; i < kWidth; ++i) {
                g_w3[i] += dz * h2[i];
                d2[i] = dz * w3_[i] * (1.0 - h2[i] * h2[i]);
            }
            g_b3 += dz;
            double d1[kWidth] = {};
            for (int i = 0; i < kWidth; ++i) {
                g_b2[i] += d2[i];
                for (int k = 0; k < kWidth; ++k) {
                    g_w2[i * kWidth + k] += d2[i] * h1[k];
                    d1[k] += d2[i] * w2_[i * kWidth + k];
                }
            }
            for (int k = 0; k < kWidth; ++k) {
                double dk = d1[k] * (1.0 - h1[k] * h1[k]);
                g_b1[k] += dk;
                g_w1[k * 2] += dk * batch[s].x;
                g_w1[k * 2 + 1] += dk * batch[s].y;
            }
        }

        double inv = 1.0 / static_cast<double>(batch.size());
        for (std::size_t i = 0; i < w1_.size(); ++i) w1_[i] -= lr * inv * g_w1[i];
        for (std::size_t i = 0; i < b1_.size(); ++i) b1_[i] -= lr * inv * g_b1[i];
        for (std::size_t i = 0; i < w2_.size(); ++i) w2_[i] -= lr * inv * g_w2[i];
        for (std::size_t i = 0; i < b2_.size(); ++i) b2_[i] -= lr * inv * g_b2[i];
        for (std::size_t i = 0; i < w3_.size(); ++i) w3_[i] -= lr * inv * g_w3[i];
        b3_ -= lr * inv * g_b3;
        return losses;
    }

  private:
    void forward(double x, double y, double* h1, double* h2) const {
        for (int i = 0; i < kWidth; ++i)
            h1[i] = std::tanh(w1_[i * 2] * x + w1_[i * 2 + 1] * y + b1_[i]);
        for (int i = 0; i < kWidth; ++i) {
            double a = b2_[i];
            for (int k = 0; k < kWidth; ++k) a += w2_[i * kWidth + k] * h1[k];
            h2[i] = std::tanh(a);
        }
    }

    double output(const double* h2) const {
        double z = b3_;
        for (int i = 0; i < kWidth; ++i) z += w3_[i] * h2[i];
        return 1.0 / (1.0 + std::exp(-z));
    }

    std::vector<double> w1_, b1_, w2_, b2_, w3_;
    double b3_ = 0.0;
};

struct ToyTrainOptions {
    int items_per_batch = 4;
    int points_per_draw = 128;
    double lr = 0.05;
};

struct ClusterIouRow {
    std::string cluster;
    std::string method;
    double iou = 0.0;
    int epoch = 0;
};

inline double toy_item_iou(const ToyMlp& mlp, const ToyItem& item) {
    std::vector<double> pred(item.pool.size());
    std::vector<int> labels(item.pool.size());
    for (std::size_t i = 0; i < item.pool.size(); ++i) {
        pred[i] = mlp.predict(item.pool[i].x, item.pool[i].y);
        labels[i] = item.pool[i].label;
    }
    return iou_from_points(pred, labels);
}

// Trains the toy predictor with uniform or OHEM-driven batch sampling and
// reports per-cluster IoU after every epoch (epoch 0 is the untrained
// baseline).
inline std::vector<ClusterIouRow> fit_toy_predictor(const ToyDataset& dataset, bool use_ohem,
                                                    int epochs, std::uint64_t seed,
                                                    ToyTrainOptions opts = {}) {
    if (dataset.items.empty()) throw std::invalid_argument("fit_toy_predictor: empty dataset");
    const std::string method = use_ohem ? "ohem" : "uniform";
    ToyMlp mlp(seed);
    OhemState state;
    for (std::size_t i = 0; i < dataset.items.size(); ++i)
        state.register_item(static_cast<int>(i), dataset.items[i].pool.size());
    Rng rng(seed ^ 0x0eadbeef12345678ull);

    std::vector<ClusterIouRow> rows;
    auto report = [&](int epoch) {
        std::map<std::string, std::pair<double, int>> acc;
        for (const auto& item : dataset.items) {
            auto& slot = acc[item.cluster];
            slot.first += toy_item_iou(mlp, item);
            slot.second += 1;
        }
        for (const std::string& cluster : dataset.clusters)
            rows.push_back({cluster, method, acc[cluster].first / acc[cluster].second, epoch});
    };
    report(0);

    int steps_per_epoch = static_cast<int>(
        (dataset.items.size() + opts.items_per_batch - 1) / opts.items_per_batch);
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        for (int step = 0; step < steps_per_epoch; ++step) {
            std::vector<std::pair<int, std::vector<int>>> batch;
            if (use_ohem) {
                batch = state.sample_batch(rng.raw(), opts.items_per_batch, opts.points_per_draw);
            } else {
                for (int b = 0; b < opts.items_per_batch; ++b) {
                    int id = static_cast<int>(rng.uniform_index(dataset.items.size()));
                    std::vector<int> pts(opts.points_per_draw);
                    for (int s = 0; s < opts.points_per_draw; ++s)
                        pts[s] = static_cast<int>(
                            rng.uniform_index(dataset.items[id].pool.size()));
                    batch.emplace_back(id, std::move(pts));
                }
            }

            std::vector<ToyPoint> points;
            points.reserve(batch.size() * opts.points_per_draw);
            for (const auto& [id, pids] : batch)
                for (int pid : pids) points.push_back(dataset.items[id].pool[pid]);
            std::vector<double> losses = mlp.train_step(points, opts.lr);

            if (use_ohem) {
                std::size_t cursor = 0;
                for (const auto& [id, pids] : batch) {
                    std::vector<double> pred(pids.size()), bce(pids.size());
                    std::vector<int> labels(pids.size());
                    for (std::size_t s = 0; s < pids.size(); ++s) {
                        const ToyPoint& tp = dataset.items[id].pool[pids[s]];
                        pred[s] = mlp.predict(tp.x, tp.y);
                        labels[s] = tp.label;
                        bce[s] = losses[cursor + s];
                    }
                    state.update(id, iou_from_points(pred, labels), pids, bce);
                    cursor += pids.size();
                }
            }
        }
        report(epoch);
    }
    return rows;
}

}  // namespace isocull
