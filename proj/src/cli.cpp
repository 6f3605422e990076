#include "swflow/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "swflow/csvio.hpp"
#include "swflow/errors.hpp"
#include "swflow/geometry.hpp"
#include "swflow/manifest.hpp"
#include "swflow/metrics.hpp"
#include "swflow/registration.hpp"
#include "swflow/threading.hpp"
#include "swflow/validation.hpp"

namespace swflow::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        if (eq == std::string::npos) {
            if (!trim(line).empty())
                throw input_error(path + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw input_error(path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = val;
    }
    return kv;
}

double to_double(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const double d = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return d;
    } catch (const std::exception&) {
        throw input_error("config: bad numeric value for " + key + ": '" + val + "'");
    }
}

long to_long(const std::string& key, const std::string& val) {
    try {
        std::size_t used = 0;
        const long v = std::stol(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        return v;
    } catch (const std::exception&) {
        throw input_error("config: bad integer value for " + key + ": '" + val + "'");
    }
}

bool to_bool(const std::string& key, const std::string& val) {
    if (val == "true" || val == "1" || val == "yes") return true;
    if (val == "false" || val == "0" || val == "no") return false;
    throw input_error("config: bad boolean value for " + key + ": '" + val + "'");
}

void apply_config_entry(RegistrationConfig& cfg, const std::string& key, const std::string& val) {
    if (key == "method") cfg.flow.method = parse_flow_method(val);
    else if (key == "objective") {
        if (val == "swd") cfg.affine_objective = AffineObjective::kSlicedWasserstein;
        else if (val == "icp") cfg.affine_objective = AffineObjective::kNearestNeighbor;
        else throw input_error("config: objective must be swd or icp, got '" + val + "'");
    } else if (key == "k_affine") cfg.k_affine = to_long(key, val);
    else if (key == "k_sw") cfg.k_sw = to_long(key, val);
    else if (key == "k_cham") cfg.k_cham = to_long(key, val);
    else if (key == "eta") cfg.flow.eta = to_double(key, val);
    else if (key == "eta_sw") cfg.eta_sw = to_double(key, val);
    else if (key == "eta_cham") cfg.eta_cham = to_double(key, val);
    else if (key == "lambda_lap") cfg.objective.lambda_lap = to_double(key, val);
    else if (key == "projections") cfg.objective.projection_count =
             static_cast<std::size_t>(to_long(key, val));
    else if (key == "alpha") cfg.flow.alpha = to_double(key, val);
    else if (key == "beta") cfg.flow.beta = to_double(key, val);
    else if (key == "epsilon") cfg.flow.epsilon = to_double(key, val);
    else if (key == "h") cfg.flow.step_size = to_double(key, val);
    else if (key == "damping") cfg.flow.damping = to_double(key, val);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(key, val));
    else if (key == "com_align") cfg.com_align = to_bool(key, val);
    else if (key == "metrics_every") cfg.metrics_every = to_long(key, val);
    else if (key == "metrics_samples") cfg.metrics_samples =
             static_cast<std::size_t>(to_long(key, val));
    else if (key == "preset") { /* handled before other keys */ }
    else throw input_error("config: unknown key '" + key + "'");
}

std::map<std::string, std::string> snapshot_config(const RegistrationConfig& cfg,
                                                   const std::string& mode) {
    std::map<std::string, std::string> out;
    out["mode"] = mode;
    out["method"] = flow_method_name(cfg.flow.method);
    out["objective"] =
        cfg.affine_objective == AffineObjective::kSlicedWasserstein ? "swd" : "icp";
    out["k_affine"] = std::to_string(cfg.k_affine);
    out["k_sw"] = std::to_string(cfg.k_sw);
    out["k_cham"] = std::to_string(cfg.k_cham);
    out["eta"] = format_full(cfg.flow.eta);
    out["eta_sw"] = format_full(cfg.eta_sw);
    out["eta_cham"] = format_full(cfg.eta_cham);
    out["lambda_lap"] = format_full(cfg.objective.lambda_lap);
    out["projections"] = std::to_string(cfg.objective.projection_count);
    out["alpha"] = format_full(cfg.flow.alpha);
    out["beta"] = format_full(cfg.flow.beta);
    out["epsilon"] = format_full(cfg.flow.epsilon);
    out["h"] = format_full(cfg.flow.step_size);
    out["damping"] = format_full(cfg.flow.damping);
    out["seed"] = std::to_string(cfg.seed);
    out["com_align"] = cfg.com_align ? "true" : "false";
    out["metrics_every"] = std::to_string(cfg.metrics_every);
    out["metrics_samples"] = std::to_string(cfg.metrics_samples);
    out["threads"] = std::to_string(thread_count());
    return out;
}

std::string transform_csv(const AffineTransform& t) {
    std::string out = csv_row({"a00", "a01", "a02", "a10", "a11", "a12", "a20", "a21", "a22",
                               "bx", "by", "bz"});
    std::vector<std::string> row;
    for (int i = 0; i < 9; ++i) row.push_back(format_full(t.A.m[i]));
    row.push_back(format_full(t.b.x));
    row.push_back(format_full(t.b.y));
    row.push_back(format_full(t.b.z));
    out += csv_row(row);
    return out;
}

std::string displacements_csv(const std::vector<Vec3>& d) {
    std::string out = csv_row({"index", "dx", "dy", "dz"});
    for (std::size_t i = 0; i < d.size(); ++i)
        out += csv_row({std::to_string(i), format_full(d[i].x), format_full(d[i].y),
                        format_full(d[i].z)});
    return out;
}

struct RegisterArgs {
    std::string mode, src, tgt, config_path, preset, method, out_dir = ".";
    long seed = -1;
    bool seed_set = false;
};

int cmd_register(const RegisterArgs& a, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    if (a.mode != "affine" && a.mode != "nonrigid")
        throw input_error("register mode must be 'affine' or 'nonrigid'");

    std::map<std::string, std::string> file_cfg;
    if (!a.config_path.empty()) file_cfg = parse_config_file(a.config_path);

    std::string preset = a.preset;
    if (preset.empty() && file_cfg.count("preset")) preset = file_cfg.at("preset");
    FlowMethod method = FlowMethod::kAdamFlow;
    if (file_cfg.count("method")) method = parse_flow_method(file_cfg.at("method"));
    if (!a.method.empty()) method = parse_flow_method(a.method);

    RegistrationConfig cfg = preset_config(preset.empty() ? "synth-nonrigid" : preset, method);
    for (const auto& [k, v] : file_cfg)
        if (k != "method") apply_config_entry(cfg, k, v);
    if (!a.method.empty()) {
        cfg.flow.method = method;
        cfg.flow.eta = file_cfg.count("eta") ? cfg.flow.eta
                                             : preset_affine_eta(method, cfg.affine_objective);
        if (!file_cfg.count("eta_sw") && !file_cfg.count("eta_cham"))
            preset_nonrigid_etas(method, cfg.eta_sw, cfg.eta_cham);
    }
    if (a.seed_set) cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.validate();

    const TriMesh src = load_mesh(a.src);
    const TriMesh tgt = load_mesh(a.tgt);

    fs::create_directories(a.out_dir);
    const std::string mesh_path = (fs::path(a.out_dir) / "registered.obj").string();
    const std::string hist_path = (fs::path(a.out_dir) / "history.csv").string();
    const std::string manifest_path = (fs::path(a.out_dir) / "manifest.json").string();

    RunManifest man;
    man.version = kVersion;
    man.command = "register";
    man.argv = argv;
    man.config = snapshot_config(cfg, a.mode);
    man.seed = cfg.seed;
    man.inputs[a.src] = file_hash_hex(a.src);
    man.inputs[a.tgt] = file_hash_hex(a.tgt);
    if (!a.config_path.empty()) man.inputs[a.config_path] = file_hash_hex(a.config_path);

    std::string param_path;
    if (a.mode == "affine") {
        auto [transform, history] = register_affine(src, tgt, cfg);
        param_path = (fs::path(a.out_dir) / "transform.csv").string();
        save_mesh(apply_affine(src, transform), mesh_path);
        write_file_atomic(param_path, transform_csv(transform));
        history.to_csv(hist_path);
        std::cout << "affine registration: " << cfg.k_affine << " steps, final objective "
                  << (history.records.empty() ? 0.0 : history.records.back().objective) << "\n";
    } else {
        auto [disp, history] = register_nonrigid(src, tgt, cfg);
        param_path = (fs::path(a.out_dir) / "displacements.csv").string();
        std::vector<Vec3> moved = src.vertices();
        for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += disp[i];
        save_mesh(TriMesh(std::move(moved), src.faces()), mesh_path);
        write_file_atomic(param_path, displacements_csv(disp));
        history.to_csv(hist_path);
        std::cout << "nonrigid registration: " << cfg.k_sw << "+" << cfg.k_cham
                  << " steps, final objective "
                  << (history.records.empty() ? 0.0 : history.records.back().objective) << "\n";
    }

    man.outputs[mesh_path] = file_hash_hex(mesh_path);
    man.outputs[param_path] = file_hash_hex(param_path);
    man.logs.push_back(hist_path);
    man.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    man.write(manifest_path);
    std::cout << "outputs in " << a.out_dir << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string a, b, out_dir = ".";
    std::size_t n = 50000;
    long seed = 0;
};

int cmd_evaluate(const EvaluateArgs& e, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    const TriMesh mesh_a = load_mesh(e.a);
    const TriMesh mesh_b = load_mesh(e.b);
    RngStream rng(static_cast<std::uint64_t>(e.seed));
    const SurfaceErrorReport rep = surface_errors(mesh_a, mesh_b, e.n, rng);

    fs::create_directories(e.out_dir);
    const std::string csv_path = (fs::path(e.out_dir) / "errors.csv").string();
    std::string csv = csv_row({"mesh_a", "mesh_b", "assd_mm", "hd90_mm", "n", "seed"});
    csv += csv_row({e.a, e.b, format_full(rep.assd), format_full(rep.hd90),
                    std::to_string(rep.n_samples), std::to_string(rep.seed)});
    write_file_atomic(csv_path, csv);

    std::printf("assd_mm=%.6f hd90_mm=%.6f n=%zu seed=%llu\n", rep.assd, rep.hd90, rep.n_samples,
                static_cast<unsigned long long>(rep.seed));

    RunManifest man;
    man.version = kVersion;
    man.command = "evaluate";
    man.argv = argv;
    man.config = {{"n", std::to_string(e.n)},
                  {"seed", std::to_string(e.seed)},
                  {"threads", std::to_string(thread_count())}};
    man.seed = static_cast<std::uint64_t>(e.seed);
    man.inputs[e.a] = file_hash_hex(e.a);
    man.inputs[e.b] = file_hash_hex(e.b);
    man.outputs[csv_path] = file_hash_hex(csv_path);
    man.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    man.write((fs::path(e.out_dir) / "manifest.json").string());
    return 0;
}

struct BenchArgs {
    std::vector<std::string> metrics{"swd", "chamfer", "icp"};
    std::vector<long> sizes;
    std::size_t projections = 4;
    int repeats = 1000;
    long seed = 0;
    std::string out_dir = ".";
};

int cmd_bench(const BenchArgs& b, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    std::vector<long> sizes = b.sizes;
    if (sizes.empty())
        for (long n = 5000; n <= 50000; n += 5000) sizes.push_back(n);
    for (long n : sizes)
        if (n < 1) throw input_error("bench: sizes must be >= 1");
    for (const auto& m : b.metrics)
        if (m != "swd" && m != "chamfer" && m != "icp")
            throw input_error("bench: unknown metric '" + m + "' (swd, chamfer, icp)");

    RngStream rng(static_cast<std::uint64_t>(b.seed));
    std::string csv = csv_row({"metric", "N", "L", "mean_ms", "std_ms"});
    for (const auto& metric : b.metrics) {
        for (long n : sizes) {
            PointSet src, tgt;
            const auto refresh = [&]() {
                src.points.assign(static_cast<std::size_t>(n), Vec3{});
                tgt.points.assign(static_cast<std::size_t>(n), Vec3{});
                for (auto& p : src.points) p = rng.normal3();
                for (auto& p : tgt.points) p = rng.normal3();
            };
            std::function<void()> body;
            ProjectionSet proj;
            if (metric == "swd") {
                body = [&]() {
                    proj = sample_projections(b.projections, rng);
                    (void)sliced_wasserstein(src, tgt, proj);
                };
            } else if (metric == "chamfer") {
                body = [&]() { (void)chamfer(src, tgt); };
            } else {
                body = [&]() { (void)icp_objective(src, tgt); };
            }
            const TimingStats st = repeat_timing(metric, body, b.repeats, refresh);
            csv += csv_row({metric, std::to_string(n), std::to_string(b.projections),
                            format_full(st.mean_ms), format_full(st.std_ms)});
            std::printf("%-8s N=%-6ld mean=%.3f ms  std=%.3f ms  (%d repeats)\n", metric.c_str(),
                        n, st.mean_ms, st.std_ms, st.repeats);
        }
    }
    fs::create_directories(b.out_dir);
    const std::string csv_path = (fs::path(b.out_dir) / "bench.csv").string();
    write_file_atomic(csv_path, csv);

    RunManifest man;
    man.version = kVersion;
    man.command = "bench";
    man.argv = argv;
    man.config = {{"repeats", std::to_string(b.repeats)},
                  {"seed", std::to_string(b.seed)},
                  {"L", std::to_string(b.projections)},
                  {"threads", std::to_string(thread_count())}};
    man.seed = static_cast<std::uint64_t>(b.seed);
    man.logs.push_back(csv_path);  // timing data is not byte-reproducible
    man.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    man.write((fs::path(b.out_dir) / "manifest.json").string());
    return 0;
}

struct SynthArgs {
    std::string shape = "sphere";
    int subdivisions = 3;
    double scale = 1.0;
    long seed = 0;
    std::string out;
};

int cmd_synth(const SynthArgs& s, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    const SyntheticShape shape = SyntheticShape::parse(s.shape);
    RngStream rng(static_cast<std::uint64_t>(s.seed));
    TriMesh mesh = make_synthetic(shape, s.subdivisions, rng);
    if (s.scale != 1.0) {
        AffineTransform t;
        t.A = Mat3::diag(s.scale, s.scale, s.scale);
        mesh = apply_affine(mesh, t);
    }
    save_mesh(mesh, s.out);
    std::cout << s.out << ": " << mesh.vertex_count() << " vertices, " << mesh.face_count()
              << " faces\n";

    RunManifest man;
    man.version = kVersion;
    man.command = "synth";
    man.argv = argv;
    man.config = {{"shape", s.shape},
                  {"subdivisions", std::to_string(s.subdivisions)},
                  {"scale", format_full(s.scale)},
                  {"seed", std::to_string(s.seed)}};
    man.seed = static_cast<std::uint64_t>(s.seed);
    man.outputs[s.out] = file_hash_hex(s.out);
    man.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    man.write(s.out + ".manifest.json");
    return 0;
}

int cmd_verify(long seed) {
    const auto checks = run_all_checks(static_cast<std::uint64_t>(seed));
    std::size_t failed = 0;
    std::printf("%-28s %-6s %s\n", "check", "status", "detail");
    for (const auto& c : checks) {
        if (!c.pass) ++failed;
        std::printf("%-28s %-6s %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                    c.detail.c_str());
    }
    std::printf("%zu/%zu checks passed\n", checks.size() - failed, checks.size());
    return failed == 0 ? 0 : 1;
}

int cmd_rerun(const std::string& manifest_path, bool check) {
    const RunManifest man = RunManifest::from_json_file(manifest_path);
    if (man.argv.empty()) throw input_error("manifest has no recorded command line");
    std::cout << "rerunning:";
    for (const auto& a : man.argv) std::cout << ' ' << a;
    std::cout << "\n";
    const int rc = run(man.argv);
    if (rc != 0 || !check) return rc;
    std::size_t mismatched = 0;
    for (const auto& [path, hash] : man.outputs) {
        const std::string now = file_hash_hex(path);
        const bool ok = now == hash;
        if (!ok) ++mismatched;
        std::printf("%-8s %s\n", ok ? "MATCH" : "DIFFER", path.c_str());
    }
    if (mismatched == 0) {
        std::cout << "all outputs byte-identical\n";
        return 0;
    }
    std::cout << mismatched << " outputs differ\n";
    return 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"surface registration via sliced-Wasserstein particle flows"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int threads = 1;
    if (const char* env = std::getenv("SWFLOW_THREADS")) {
        try {
            threads = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            threads = 1;
        }
    }
    app.add_option("--threads", threads, "worker cap for parallel sections");

    RegisterArgs reg;
    auto* reg_cmd = app.add_subcommand("register", "affine or non-rigid mesh registration");
    reg_cmd->add_option("mode", reg.mode, "affine | nonrigid")->required();
    reg_cmd->add_option("source", reg.src, "source mesh (OBJ/PLY)")->required();
    reg_cmd->add_option("target", reg.tgt, "target mesh (OBJ/PLY)")->required();
    reg_cmd->add_option("--config", reg.config_path, "key = value config file");
    reg_cmd->add_option("--preset", reg.preset,
                        "schedule preset: liver, pancreas, left-ventricle, synth-affine, synth-nonrigid");
    reg_cmd->add_option("--method", reg.method, "wgf | hbf | nesterov | adamflow");
    auto* reg_seed = reg_cmd->add_option("--seed", reg.seed, "random stream seed");
    reg_cmd->add_option("--out", reg.out_dir, "output directory");

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "surface error metrics between two meshes");
    ev_cmd->add_option("mesh_a", ev.a)->required();
    ev_cmd->add_option("mesh_b", ev.b)->required();
    ev_cmd->add_option("--n", ev.n, "sample count per mesh");
    ev_cmd->add_option("--seed", ev.seed, "random stream seed");
    ev_cmd->add_option("--out", ev.out_dir, "output directory");

    BenchArgs be;
    auto* be_cmd = app.add_subcommand("bench", "discrepancy-metric runtime benchmarks");
    be_cmd->add_option("--metric", be.metrics, "metrics to time (swd chamfer icp)");
    be_cmd->add_option("--sizes", be.sizes, "point counts");
    be_cmd->add_option("--L", be.projections, "projection count for swd");
    be_cmd->add_option("--repeats", be.repeats, "timing repeats per configuration");
    be_cmd->add_option("--seed", be.seed, "random stream seed");
    be_cmd->add_option("--out", be.out_dir, "output directory");

    SynthArgs sy;
    auto* sy_cmd = app.add_subcommand("synth", "generate a synthetic test mesh");
    sy_cmd->add_option("shape", sy.shape, "sphere | ellipsoid:a,b,c | perturbed:amp,freq")
        ->required();
    sy_cmd->add_option("--subdivisions", sy.subdivisions, "icosphere subdivision rounds");
    sy_cmd->add_option("--scale", sy.scale, "uniform scale factor");
    sy_cmd->add_option("--seed", sy.seed, "random stream seed");
    sy_cmd->add_option("--out", sy.out, "output mesh path (.obj or .ply)")->required();

    long verify_seed = 20240901;
    auto* vf_cmd = app.add_subcommand("verify", "run the numerical oracle suite");
    vf_cmd->add_option("--seed", verify_seed, "oracle instance seed");

    std::string rerun_manifest;
    bool rerun_check = false;
    auto* rr_cmd = app.add_subcommand("rerun", "replay a recorded run from its manifest");
    rr_cmd->add_option("manifest", rerun_manifest)->required();
    rr_cmd->add_flag("--check", rerun_check, "verify outputs are byte-identical");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    set_thread_count(threads);
    reg.seed_set = reg_seed->count() > 0;

    try {
        if (reg_cmd->parsed()) return cmd_register(reg, args);
        if (ev_cmd->parsed()) return cmd_evaluate(ev, args);
        if (be_cmd->parsed()) return cmd_bench(be, args);
        if (sy_cmd->parsed()) return cmd_synth(sy, args);
        if (vf_cmd->parsed()) return cmd_verify(verify_seed);
        if (rr_cmd->parsed()) return cmd_rerun(rerun_manifest, rerun_check);
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace swflow::cli
