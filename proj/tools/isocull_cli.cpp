// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: scene extraction, benchmarking, mesh-free
// rendering, mesh metrics, and the OHEM training demo. Every command is
// deterministic given (config, seed); wall-clock columns are informative
// only.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isocull/field.hpp"
#include "isocull/image.hpp"
#include "isocull/localize.hpp"
#include "isocull/mesh.hpp"
#include "isocull/metrics.hpp"
#include "isocull/render.hpp"
#include "isocull/scene.hpp"
#include "isocull/toy.hpp"

namespace fs = std::filesystem;
using namespace isocull;

namespace {

int level_for_resolution(int resolution, int coarsest) {
    if (coarsest < 2) throw std::invalid_argument("coarsest must be >= 2");
    int level = 0;
    int r = coarsest;
    while (r < resolution && level < 16) {
        r *= 2;
        ++level;
    }
    if (r != resolution)
        throw std::invalid_argument("resolution must be coarsest * 2^L, got " +
                                    std::to_string(resolution) + " with coarsest " +
                                    std::to_string(coarsest));
    return level;
}

std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

constexpr const char* kStatsHeader = "scene,variant,threshold,R_L,total_evals,accel_factor,iou,wall_ms";

void append_stats_row(std::ostream& out, const std::string& scene, const std::string& variant,
                      const std::string& threshold, int resolution, std::uint64_t evals,
                      double accel, double iou, double wall_ms) {
    out << scene << ',' << variant << ',' << threshold << ',' << resolution << ',' << evals << ','
        << csv_double(accel) << ',' << csv_double(iou) << ',' << csv_double(wall_ms) << '\n';
}

struct ExtractArgs {
    std::string scene_path;
    std::string variant = "progressive";
    double threshold = 0.12;
    int resolution = 128;
    int coarsest = 16;
    std::string out_dir = "out";
    int workers = 1;
    std::uint64_t seed = 42;
};

AlgoConfig make_config(const std::string& variant, double threshold, int resolution, int coarsest) {
    AlgoConfig cfg;
    cfg.variant = variant_from_name(variant);
    cfg.threshold = threshold;
    cfg.coarsest_cells = coarsest;
    cfg.target_level = level_for_resolution(resolution, coarsest);
    validate_config(cfg);
    return cfg;
}

int cmd_extract(const ExtractArgs& args) {
    SceneSpec scene = load_scene(args.scene_path);
    AlgoConfig cfg = make_config(args.variant, args.threshold, args.resolution, args.coarsest);
    FieldOracle oracle = build_oracle(scene);

    ExtractionResult result = extract(oracle, cfg, args.workers);

    double accel = 1.0;
    double iou = 1.0;
    if (cfg.variant != Variant::brute) {
        AlgoConfig brute_cfg = cfg;
        brute_cfg.variant = Variant::brute;
        ExtractionResult brute = extract_brute_force(oracle, brute_cfg, args.workers);
        accel = acceleration_factor(result, brute);
        iou = compare_iou(result.binarized, brute.binarized);
    }

    fs::create_directories(args.out_dir);
    TriangleMesh mesh = marching_cubes(result.grid);
    fs::path obj_path = fs::path(args.out_dir) / (scene.name + "_" + args.variant + ".obj");
    export_obj(mesh, obj_path.string());

    fs::path csv_path = fs::path(args.out_dir) / "stats.csv";
    bool fresh = !fs::exists(csv_path);
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
    if (fresh) csv << kStatsHeader << '\n';
    append_stats_row(csv, scene.name, args.variant,
                     cfg.variant == Variant::octree_threshold ? csv_double(args.threshold) : "",
                     args.resolution, result.total_evals, accel, iou, result.wall_seconds * 1e3);

    std::cerr << "extract: " << scene.name << " (" << args.variant << ", " << args.resolution
              << "^3, tau=" << scene.tau << "): evals=" << result.total_evals
              << " accel=" << csv_double(accel) << " iou=" << csv_double(iou) << " -> "
              << obj_path.string() << "\n";
    if (result.conflict_warning)
        std::cerr << "extract: warning: conflict pass hit its iteration bound\n";
    return 0;
}

struct BenchArgs {
    std::vector<std::string> scene_paths;
    std::vector<std::string> variants = {"brute", "octree_binarized", "octree_threshold",
                                         "progressive"};
    std::vector<double> thresholds = {0.05, 0.08, 0.12, 0.2, 0.3, 0.4};
    std::vector<int> resolutions = {128};
    int coarsest = 16;
    std::string out_dir = "out";
    int workers = 1;
    std::uint64_t seed = 42;
};

int cmd_bench(const BenchArgs& args) {
    fs::create_directories(args.out_dir);
    fs::path csv_path = fs::path(args.out_dir) / "bench.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
    csv << kStatsHeader << '\n';

    for (const std::string& path : args.scene_paths) {
        SceneSpec scene = load_scene(path);
        FieldOracle oracle = build_oracle(scene);
        std::cerr << "bench: scene " << scene.name << " tau=" << scene.tau << "\n";
        for (int resolution : args.resolutions) {
            AlgoConfig base = make_config("brute", 0.12, resolution, args.coarsest);
            ExtractionResult brute = extract_brute_force(oracle, base, args.workers);
            for (const std::string& variant : args.variants) {
                Variant v = variant_from_name(variant);
                std::vector<double> thresholds =
                    v == Variant::octree_threshold ? args.thresholds : std::vector<double>{0.0};
                for (double t : thresholds) {
                    ExtractionResult result;
                    if (v == Variant::brute) {
                        result = brute;  // reference run doubles as the brute row
                    } else {
                        AlgoConfig cfg = make_config(variant, t, resolution, args.coarsest);
                        result = extract(oracle, cfg, args.workers);
                    }
                    append_stats_row(csv, scene.name, variant,
                                     v == Variant::octree_threshold ? csv_double(t) : "",
                                     resolution, result.total_evals,
                                     acceleration_factor(result, brute),
                                     compare_iou(result.binarized, brute.binarized),
                                     result.wall_seconds * 1e3);
                }
            }
        }
    }
    std::cerr << "bench: wrote " << csv_path.string() << "\n";
    return 0;
}

struct RenderArgs {
    std::string scene_path;
    std::vector<double> camera = {0.0, 0.0, 0.0};  // yaw, pitch, dist (degrees, NDC)
    std::string projection = "ortho";
    double scale = 1.0;
    std::vector<double> background = {0.0, 0.0, 0.0};
    int resolution = 128;
    int coarsest = 16;
    std::string out_dir = "out";
    int workers = 1;
    std::uint64_t seed = 42;
    bool depth_dump = false;
};

int cmd_render(const RenderArgs& args) {
    SceneSpec scene = load_scene(args.scene_path);
    if (!scene.has_texture()) throw std::invalid_argument("render: scene has no texture");
    if (args.camera.size() != 3)
        throw std::invalid_argument("render: --camera wants yaw,pitch,dist");
    if (args.background.size() != 3)
        throw std::invalid_argument("render: --background wants r,g,b");
    if (args.projection != "ortho" && args.projection != "weak")
        throw std::invalid_argument("render: projection must be ortho or weak");

    AlgoConfig cfg = make_config("progressive", 0.12, args.resolution, args.coarsest);
    double scale = args.projection == "weak" ? args.scale : 1.0;
    CameraSpec camera = CameraSpec::from_angles(args.camera[0], args.camera[1], args.camera[2], scale);
    FieldOracle oracle = build_oracle(scene);
    Vec3 background{args.background[0], args.background[1], args.background[2]};

    RenderedImage image = render_view(oracle, camera, cfg, background, args.workers);

    fs::create_directories(args.out_dir);
    fs::path ppm_path = fs::path(args.out_dir) / "render.ppm";
    write_ppm(ppm_path.string(), image.width, image.height, image.rgb);
    if (args.depth_dump) {
        fs::path depth_path = fs::path(args.out_dir) / "depth.f32";
        write_float_map(depth_path.string(), image.width, image.height, image.depth);
    }
    std::cerr << "render: " << scene.name << " " << image.width << "x" << image.height
              << " oracle_calls=" << image.oracle_calls
              << " degenerate=" << image.degenerate_brackets
              << " grazing=" << image.grazing_pixels << " -> " << ppm_path.string() << "\n";
    return 0;
}

struct MetricsArgs {
    std::string mesh_a, mesh_b;
    int samples = 10000;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int workers = 1;
};

int cmd_metrics(const MetricsArgs& args) {
    TriangleMesh a = load_obj(args.mesh_a);
    TriangleMesh b = load_obj(args.mesh_b);
    if (a.empty() || b.empty()) throw std::invalid_argument("metrics: empty mesh");
    SurfaceSamples sa = sample_surface(a, args.samples, args.seed);
    SurfaceSamples sb = sample_surface(b, args.samples, args.seed + 1);

    double chamfer = chamfer_distance(sa, sb, args.workers);
    double p2s_ab = p2s_distance(sa, b, args.workers);
    double p2s_ba = p2s_distance(sb, a, args.workers);
    double haus_ab = hausdorff_distance(sa, b, args.workers);
    double haus_ba = hausdorff_distance(sb, a, args.workers);

    fs::create_directories(args.out_dir);
    fs::path csv_path = fs::path(args.out_dir) / "metrics.csv";
    std::ofstream csv(csv_path);
    csv << "mesh_a,mesh_b,samples,chamfer,p2s_a_to_b,p2s_b_to_a,hausdorff_a_to_b,hausdorff_b_to_a\n";
    char line[512];
    std::snprintf(line, sizeof(line), "%s,%s,%d,%.9f,%.9f,%.9f,%.9f,%.9f\n", args.mesh_a.c_str(),
                  args.mesh_b.c_str(), args.samples, chamfer, p2s_ab, p2s_ba, haus_ab, haus_ba);
    csv << line;
    std::cout << "chamfer=" << csv_double(chamfer) << " p2s(a->b)=" << csv_double(p2s_ab)
              << " p2s(b->a)=" << csv_double(p2s_ba) << " hausdorff(a->b)=" << csv_double(haus_ab)
              << " hausdorff(b->a)=" << csv_double(haus_ba) << "\n";
    return 0;
}

struct OhemDemoArgs {
    std::string dataset_path;
    int epochs = 30;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int workers = 1;
};

int cmd_ohem_demo(const OhemDemoArgs& args) {
    ToyDataset dataset = load_toy_dataset(args.dataset_path);
    std::vector<ClusterIouRow> rows = fit_toy_predictor(dataset, false, args.epochs, args.seed);
    std::vector<ClusterIouRow> ohem_rows = fit_toy_predictor(dataset, true, args.epochs, args.seed);
    rows.insert(rows.end(), ohem_rows.begin(), ohem_rows.end());

    fs::create_directories(args.out_dir);
    fs::path csv_path = fs::path(args.out_dir) / "ohem.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
    csv << "cluster,method,iou,epoch\n";
    for (const auto& row : rows)
        csv << row.cluster << ',' << row.method << ',' << csv_double(row.iou) << ',' << row.epoch
            << '\n';
    std::cerr << "ohem-demo: " << dataset.name << " epochs=" << args.epochs << " -> "
              << csv_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"isocull: accelerated isosurface localization and mesh-free rendering for "
                 "occupancy fields"};
    app.require_subcommand(1);

    ExtractArgs ex;
    CLI::App* extract_cmd = app.add_subcommand("extract", "extract a surface mesh from a scene");
    extract_cmd->add_option("--scene", ex.scene_path, "scene JSON path")->required();
    extract_cmd->add_option("--variant", ex.variant,
                            "brute|octree_binarized|octree_threshold|progressive");
    extract_cmd->add_option("--threshold", ex.threshold, "octree_threshold subdivision threshold");
    extract_cmd->add_option("--resolution", ex.resolution, "target cells per axis");
    extract_cmd->add_option("--coarsest", ex.coarsest, "coarsest cells per axis");
    extract_cmd->add_option("--out", ex.out_dir, "output directory");
    extract_cmd->add_option("--seed", ex.seed, "run seed");
    extract_cmd->add_option("--workers", ex.workers, "worker threads");

    BenchArgs be;
    CLI::App* bench_cmd = app.add_subcommand("bench", "benchmark extraction variants");
    bench_cmd->add_option("--scene", be.scene_paths, "scene JSON path (repeatable)")->required();
    bench_cmd->add_option("--variant", be.variants, "variants to run (repeatable)");
    bench_cmd->add_option("--threshold", be.thresholds, "octree_threshold sweep values");
    bench_cmd->add_option("--resolution", be.resolutions, "target cells per axis (repeatable)");
    bench_cmd->add_option("--coarsest", be.coarsest, "coarsest cells per axis");
    bench_cmd->add_option("--out", be.out_dir, "output directory");
    bench_cmd->add_option("--seed", be.seed, "run seed");
    bench_cmd->add_option("--workers", be.workers, "worker threads");

    RenderArgs re;
    CLI::App* render_cmd = app.add_subcommand("render", "mesh-free novel-view render");
    render_cmd->add_option("--scene", re.scene_path, "scene JSON path")->required();
    render_cmd->add_option("--camera", re.camera, "yaw,pitch,dist")->delimiter(',');
    render_cmd->add_option("--projection", re.projection, "ortho|weak");
    render_cmd->add_option("--scale", re.scale, "weak-perspective xy scale");
    render_cmd->add_option("--background", re.background, "background color r,g,b")->delimiter(',');
    render_cmd->add_option("--resolution", re.resolution, "target cells per axis");
    render_cmd->add_option("--coarsest", re.coarsest, "coarsest cells per axis");
    render_cmd->add_option("--out", re.out_dir, "output directory");
    render_cmd->add_option("--seed", re.seed, "run seed");
    render_cmd->add_option("--workers", re.workers, "worker threads");
    render_cmd->add_flag("--depth-dump", re.depth_dump, "also write the depth buffer");

    MetricsArgs me;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "chamfer/P2S/Hausdorff between meshes");
    metrics_cmd->add_option("--mesh-a", me.mesh_a, "first OBJ")->required();
    metrics_cmd->add_option("--mesh-b", me.mesh_b, "second OBJ")->required();
    metrics_cmd->add_option("--samples", me.samples, "surface samples per mesh");
    metrics_cmd->add_option("--seed", me.seed, "sampling seed");
    metrics_cmd->add_option("--out", me.out_dir, "output directory");
    metrics_cmd->add_option("--workers", me.workers, "worker threads");

    OhemDemoArgs oh;
    CLI::App* ohem_cmd = app.add_subcommand("ohem-demo", "uniform vs OHEM training comparison");
    ohem_cmd->add_option("--dataset", oh.dataset_path, "dataset JSON path")->required();
    ohem_cmd->add_option("--epochs", oh.epochs, "training epochs");
    ohem_cmd->add_option("--seed", oh.seed, "run seed");
    ohem_cmd->add_option("--out", oh.out_dir, "output directory");
    ohem_cmd->add_option("--workers", oh.workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*extract_cmd) return cmd_extract(ex);
        if (*bench_cmd) return cmd_bench(be);
        if (*render_cmd) return cmd_render(re);
        if (*metrics_cmd) return cmd_metrics(me);
        if (*ohem_cmd) return cmd_ohem_demo(oh);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
