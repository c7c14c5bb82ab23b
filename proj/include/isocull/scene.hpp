// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "isocull/geom.hpp"

namespace isocull {

// Analytic scene description: solid primitives combined by a CSG tree,
// smoothed into an occupancy field by a sigmoid of signed distance with
// sharpness tau, plus a procedural color rule. Everything lives in the
// [-1,1]^3 NDC cube.

enum class PrimitiveKind { sphere, box, capsule, torus };

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::sphere;
    Vec3 center{};                  // sphere/box/torus
    Vec3 capsule_a{}, capsule_b{};  // capsule segment endpoints
    double radius = 0.0;            // sphere/capsule
    Vec3 half{};                    // box half extents
    double major = 0.0, minor = 0.0;  // torus radii (ring in local xz plane)
    Mat3 rotation = Mat3::identity();     // local->world
    Mat3 inv_rotation = Mat3::identity();  // world->local
    bool rotated = false;
};

enum class CsgOp { union_op, intersection_op, difference_op };

struct CsgNode {
    // Either a primitive leaf (prim >= 0) or an operator over children.
    int prim = -1;
    CsgOp op = CsgOp::union_op;
    std::vector<CsgNode> children;
};

enum class TextureKind { none, constant, gradient, per_primitive };

struct TextureRule {
    TextureKind kind = TextureKind::none;
    Vec3 color{1, 1, 1};       // constant
    int axis = 2;              // gradient: 0=x, 1=y, 2=z
    Vec3 from{}, to{1, 1, 1};  // gradient endpoint colors at coord -1 / +1
    std::vector<Vec3> colors;  // per_primitive, indexed like primitives
};

// -- signed distances ------------------------------------------------------

inline double sd_sphere(const Vec3& p, double r) { return norm(p) - r; }

inline double sd_box(const Vec3& p, const Vec3& half) {
    Vec3 q{std::abs(p.x) - half.x, std::abs(p.y) - half.y, std::abs(p.z) - half.z};
    Vec3 qpos{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    return norm(qpos) + std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
}

inline double sd_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
    Vec3 pa = p - a, ba = b - a;
    double denom = norm2(ba);
    double h = denom > 0.0 ? clamp(dot(pa, ba) / denom, 0.0, 1.0) : 0.0;
    return norm(pa - h * ba) - r;
}

inline double sd_torus(const Vec3& p, double major, double minor) {
    double qx = std::sqrt(p.x * p.x + p.z * p.z) - major;
    return std::sqrt(qx * qx + p.y * p.y) - minor;
}

inline double primitive_distance(const Primitive& prim, const Vec3& p) {
    Vec3 local = p - prim.center;
    if (prim.rotated) local = prim.inv_rotation.apply(local);
    switch (prim.kind) {
        case PrimitiveKind::sphere: return sd_sphere(local, prim.radius);
        case PrimitiveKind::box: return sd_box(local, prim.half);
        case PrimitiveKind::capsule:
            // capsule endpoints are stored in world coordinates already
            return sd_capsule(p, prim.capsule_a, prim.capsule_b, prim.radius);
        case PrimitiveKind::torus: return sd_torus(local, prim.major, prim.minor);
    }
    return std::numeric_limits<double>::infinity();
}

struct SceneSpec {
    std::vector<Primitive> primitives;
    CsgNode csg;                  // defaults to union of all primitives
    double tau = 2.0 / 256.0;     // sigmoid transition band width
    TextureRule texture;
    std::string name = "scene";

    bool has_texture() const { return texture.kind != TextureKind::none; }

    double signed_distance(const Vec3& p) const { return eval_node(csg, p); }

    Vec3 texture_color(const Vec3& p) const {
        switch (texture.kind) {
            case TextureKind::constant: return texture.color;
            case TextureKind::gradient: {
                double c = texture.axis == 0 ? p.x : (texture.axis == 1 ? p.y : p.z);
                return lerp(texture.from, texture.to, 0.5 * (c + 1.0));
            }
            case TextureKind::per_primitive: {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_i = 0;
                for (std::size_t i = 0; i < primitives.size(); ++i) {
                    double d = primitive_distance(primitives[i], p);
                    if (d < best) {
                        best = d;
                        best_i = i;
                    }
                }
                return texture.colors[best_i];
            }
            case TextureKind::none: break;
        }
        throw std::logic_error("texture_color on texture-free scene");
    }

  private:
    double eval_node(const CsgNode& node, const Vec3& p) const {
        if (node.prim >= 0) return primitive_distance(primitives[node.prim], p);
        double acc = 0.0;
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            double d = eval_node(node.children[i], p);
            if (i == 0) {
                acc = d;
                continue;
            }
            switch (node.op) {
                case CsgOp::union_op: acc = std::min(acc, d); break;
                case CsgOp::intersection_op: acc = std::max(acc, d); break;
                case CsgOp::difference_op: acc = std::max(acc, -d); break;
            }
        }
        return acc;
    }
};

// -- validation ------------------------------------------------------------

namespace detail {

inline void primitive_bounds(const Primitive& prim, Vec3& lo, Vec3& hi) {
    // Conservative bounding radius around the primitive center.
    double r = 0.0;
    Vec3 c = prim.center;
    switch (prim.kind) {
        case PrimitiveKind::sphere: r = prim.radius; break;
        case PrimitiveKind::box: r = norm(prim.half); break;
        case PrimitiveKind::torus: r = prim.major + prim.minor; break;
        case PrimitiveKind::capsule: {
            Vec3 a = prim.capsule_a, b = prim.capsule_b;
            c = 0.5 * (a + b);
            r = 0.5 * norm(b - a) + prim.radius;
            break;
        }
    }
    lo = c - Vec3{r, r, r};
    hi = c + Vec3{r, r, r};
}

inline void validate_csg(const CsgNode& node, std::size_t prim_count) {
    if (node.prim >= 0) {
        if (static_cast<std::size_t>(node.prim) >= prim_count)
            throw std::invalid_argument("scene: CSG tree references undeclared primitive " +
                                        std::to_string(node.prim));
        if (!node.children.empty())
            throw std::invalid_argument("scene: CSG leaf must not have children");
        return;
    }
    if (node.children.empty()) throw std::invalid_argument("scene: CSG operator with no children");
    if (node.op == CsgOp::difference_op && node.children.size() != 2)
        throw std::invalid_argument("scene: CSG difference takes exactly two children");
    for (const auto& child : node.children) validate_csg(child, prim_count);
}

}  // namespace detail

inline void validate_scene(const SceneSpec& scene) {
    if (!(scene.tau > 0.0)) throw std::invalid_argument("scene: tau must be > 0");
    if (scene.primitives.empty()) throw std::invalid_argument("scene: no primitives");
    for (const auto& prim : scene.primitives) {
        Vec3 lo, hi;
        detail::primitive_bounds(prim, lo, hi);
        if (lo.x < -1 || lo.y < -1 || lo.z < -1 || hi.x > 1 || hi.y > 1 || hi.z > 1)
            throw std::invalid_argument("scene: primitive exceeds the [-1,1]^3 cube");
    }
    detail::validate_csg(scene.csg, scene.primitives.size());
    if (scene.texture.kind == TextureKind::per_primitive &&
        scene.texture.colors.size() != scene.primitives.size())
        throw std::invalid_argument("scene: per_primitive texture needs one color per primitive");
}

// -- JSON ------------------------------------------------------------------

namespace detail {

inline Vec3 parse_vec3(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument(std::string("scene: ") + what + " must be a 3-array");
    Vec3 v{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
    if (!all_finite(v)) throw std::invalid_argument(std::string("scene: ") + what + " not finite");
    return v;
}

inline Mat3 parse_rotation(const nlohmann::json& j) {
    // yaw (about y), pitch (about x), roll (about z), degrees
    Vec3 angles = parse_vec3(j, "rotation");
    return Mat3::rotation_y(deg_to_rad(angles.x)) * Mat3::rotation_x(deg_to_rad(angles.y)) *
           Mat3::rotation_z(deg_to_rad(angles.z));
}

inline Primitive parse_primitive(const nlohmann::json& j) {
    Primitive prim;
    std::string kind = j.at("kind").get<std::string>();
    if (j.contains("center")) prim.center = parse_vec3(j.at("center"), "center");
    if (j.contains("rotation")) {
        prim.rotation = parse_rotation(j.at("rotation"));
        prim.inv_rotation = prim.rotation.transposed();
        prim.rotated = true;
    }
    if (kind == "sphere") {
        prim.kind = PrimitiveKind::sphere;
        prim.radius = j.at("radius").get<double>();
    } else if (kind == "box") {
        prim.kind = PrimitiveKind::box;
        prim.half = parse_vec3(j.at("half"), "half");
    } else if (kind == "capsule") {
        prim.kind = PrimitiveKind::capsule;
        prim.capsule_a = parse_vec3(j.at("a"), "a");
        prim.capsule_b = parse_vec3(j.at("b"), "b");
        prim.radius = j.at("radius").get<double>();
    } else if (kind == "torus") {
        prim.kind = PrimitiveKind::torus;
        prim.major = j.at("major").get<double>();
        prim.minor = j.at("minor").get<double>();
    } else {
        throw std::invalid_argument("scene: unknown primitive kind '" + kind + "'");
    }
    return prim;
}

inline CsgNode parse_csg(const nlohmann::json& j) {
    CsgNode node;
    if (j.contains("prim")) {
        node.prim = j.at("prim").get<int>();
        return node;
    }
    std::string op = j.at("op").get<std::string>();
    if (op == "union")
        node.op = CsgOp::union_op;
    else if (op == "intersection")
        node.op = CsgOp::intersection_op;
    else if (op == "difference")
        node.op = CsgOp::difference_op;
    else
        throw std::invalid_argument("scene: unknown CSG op '" + op + "'");
    for (const auto& child : j.at("children")) node.children.push_back(parse_csg(child));
    return node;
}

inline TextureRule parse_texture(const nlohmann::json& j) {
    TextureRule tex;
    std::string type = j.at("type").get<std::string>();
    if (type == "constant") {
        tex.kind = TextureKind::constant;
        tex.color = parse_vec3(j.at("color"), "color");
    } else if (type == "gradient") {
        tex.kind = TextureKind::gradient;
        std::string axis = j.at("axis").get<std::string>();
        if (axis == "x")
            tex.axis = 0;
        else if (axis == "y")
            tex.axis = 1;
        else if (axis == "z")
            tex.axis = 2;
        else
            throw std::invalid_argument("scene: gradient axis must be x, y, or z");
        tex.from = parse_vec3(j.at("from"), "from");
        tex.to = parse_vec3(j.at("to"), "to");
    } else if (type == "per_primitive") {
        tex.kind = TextureKind::per_primitive;
        for (const auto& c : j.at("colors")) tex.colors.push_back(parse_vec3(c, "colors[i]"));
    } else {
        throw std::invalid_argument("scene: unknown texture type '" + type + "'");
    }
    return tex;
}

}  // namespace detail

inline SceneSpec parse_scene(const nlohmann::json& j) {
    SceneSpec scene;
    if (j.contains("name")) scene.name = j.at("name").get<std::string>();
    if (j.contains("tau")) scene.tau = j.at("tau").get<double>();
    for (const auto& p : j.at("primitives")) scene.primitives.push_back(detail::parse_primitive(p));
    if (j.contains("csg")) {
        scene.csg = detail::parse_csg(j.at("csg"));
    } else {
        scene.csg.prim = -1;
        scene.csg.op = CsgOp::union_op;
        for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
            CsgNode leaf;
            leaf.prim = static_cast<int>(i);
            scene.csg.children.push_back(leaf);
        }
    }
    if (j.contains("texture")) scene.texture = detail::parse_texture(j.at("texture"));
    validate_scene(scene);
    return scene;
}

inline SceneSpec load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scene: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
        return parse_scene(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("scene: bad JSON in " + path + ": " + e.what());
    }
}

}  // namespace isocull
