#include "swflow/registration.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "swflow/csvio.hpp"
#include "swflow/errors.hpp"
#include "swflow/metrics.hpp"

namespace swflow {

AffineTransform compose(const AffineTransform& second, const AffineTransform& first) {
    return {second.A * first.A, second.A * first.b + second.b};
}

TriMesh apply_affine(const TriMesh& mesh, const AffineTransform& t) {
    std::vector<Vec3> verts;
    verts.reserve(mesh.vertex_count());
    for (const Vec3& v : mesh.vertices()) verts.push_back(t.apply(v));
    return TriMesh(std::move(verts), mesh.faces());
}

AffineTransform center_align(const TriMesh& src, const TriMesh& tgt) {
    AffineTransform t;
    t.b = tgt.vertex_mean() - src.vertex_mean();
    return t;
}

AffineTransform affine_from_flat(const std::vector<double>& x) {
    if (x.size() != 12) throw input_error("affine_from_flat: expected 12 values");
    AffineTransform t;
    for (int i = 0; i < 9; ++i) t.A.m[i] = x[i];
    t.b = {x[9], x[10], x[11]};
    return t;
}

std::vector<double> affine_to_flat(const AffineTransform& t) {
    std::vector<double> x(12);
    for (int i = 0; i < 9; ++i) x[i] = t.A.m[i];
    x[9] = t.b.x;
    x[10] = t.b.y;
    x[11] = t.b.z;
    return x;
}

AffineMomentState AffineMomentState::from_particle(const ParticleState& s) {
    if (s.x.size() != 12) throw input_error("AffineMomentState: state is not 12-dimensional");
    AffineMomentState out;
    for (int i = 0; i < 9; ++i) {
        out.m_A.m[i] = s.m[i];
        out.v_A.m[i] = s.v[i];
    }
    out.m_b = {s.m[9], s.m[10], s.m[11]};
    out.v_b = {s.v[9], s.v[10], s.v[11]};
    out.k = s.k;
    return out;
}

void RegistrationConfig::validate() const {
    flow.validate();
    objective.validate();
    if (k_affine < 0 || k_sw < 0 || k_cham < 0)
        throw input_error("registration: schedule counts must be >= 0");
    if (eta_sw <= 0.0 || eta_cham <= 0.0)
        throw input_error("registration: phase learning rates must be > 0");
    if (metrics_every < 0) throw input_error("registration: metrics_every must be >= 0");
}

double preset_affine_eta(FlowMethod method, AffineObjective objective) {
    if (objective == AffineObjective::kNearestNeighbor) return 1e-6;
    switch (method) {
        case FlowMethod::kWgf: return 1e-5;
        case FlowMethod::kHbf: return 1e-5;
        case FlowMethod::kNesterov: return 1e-7;
        case FlowMethod::kAdamFlow: return 1e-2;
    }
    return 1e-5;
}

void preset_nonrigid_etas(FlowMethod method, double& eta_sw, double& eta_cham) {
    switch (method) {
        case FlowMethod::kWgf:
        case FlowMethod::kHbf:
        case FlowMethod::kAdamFlow:
            eta_sw = 0.5;
            eta_cham = 0.1;
            return;
        case FlowMethod::kNesterov:
            eta_sw = 0.005;
            eta_cham = 0.005;
            return;
    }
}

std::vector<std::string> preset_names() {
    return {"liver", "pancreas", "left-ventricle", "synth-affine", "synth-nonrigid"};
}

RegistrationConfig preset_config(const std::string& name, FlowMethod method) {
    RegistrationConfig cfg;
    cfg.flow.method = method;
    if (name == "liver") {
        cfg.k_affine = 1500;
        cfg.k_sw = 500;
        cfg.k_cham = 200;
    } else if (name == "pancreas") {
        cfg.k_affine = 3000;
        cfg.k_sw = 1200;
        cfg.k_cham = 200;
    } else if (name == "left-ventricle") {
        cfg.k_affine = 1500;
        cfg.k_sw = 100;
        cfg.k_cham = 100;
    } else if (name == "synth-affine") {
        cfg.k_affine = 1500;
        cfg.k_sw = 150;
        cfg.k_cham = 100;
    } else if (name == "synth-nonrigid") {
        cfg.k_affine = 600;
        cfg.k_sw = 150;
        cfg.k_cham = 100;
    } else {
        throw input_error("unknown preset '" + name + "'");
    }
    cfg.flow.eta = preset_affine_eta(method, cfg.affine_objective);
    cfg.flow.steps = cfg.k_affine;
    preset_nonrigid_etas(method, cfg.eta_sw, cfg.eta_cham);
    return cfg;
}

void RegistrationHistory::to_csv(const std::string& path) const {
    std::string out = csv_row({"step", "objective", "elapsed_ms", "assd", "hd90"});
    for (const auto& r : records)
        out += csv_row({std::to_string(r.step), format_full(r.objective), format_full(r.elapsed_ms),
                        r.assd ? format_full(*r.assd) : "", r.hd90 ? format_full(*r.hd90) : ""});
    write_file_atomic(path, out);
}

std::pair<Mat3, Vec3> affine_parameter_gradient(const GradField& particle_grad,
                                                const std::vector<Vec3>& source_vertices) {
    if (particle_grad.size() != source_vertices.size())
        throw input_error("affine_parameter_gradient: size mismatch");
    Mat3 grad_A = Mat3::zero();
    Vec3 grad_b;
    for (std::size_t i = 0; i < source_vertices.size(); ++i) {
        grad_A += outer(particle_grad[i], source_vertices[i]);
        grad_b += particle_grad[i];
    }
    const double inv_n = 1.0 / static_cast<double>(source_vertices.size());
    return {grad_A * inv_n, grad_b * inv_n};
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

std::pair<AffineTransform, RegistrationHistory> register_affine(const TriMesh& src,
                                                                const TriMesh& tgt,
                                                                const RegistrationConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    RngStream rng(cfg.seed);
    const std::size_t n = src.vertex_count();
    const auto& q = src.vertices();

    AffineTransform init;
    if (cfg.com_align) init = center_align(src, tgt);
    ParticleState state = ParticleState::init(affine_to_flat(init), 12);

    FlowConfig flow = cfg.flow;
    RegistrationHistory history;
    history.records.reserve(static_cast<std::size_t>(cfg.k_affine));

    PointSet moved;
    moved.points.resize(n);
    for (long k = 0; k < cfg.k_affine; ++k) {
        if (cfg.step_probe) cfg.step_probe(k, state);
        const PointSet targets = sample_surface(tgt, n, rng);
        const AffineTransform t = affine_from_flat(state.x);
        for (std::size_t i = 0; i < n; ++i) moved[i] = t.apply(q[i]);

        double value = 0.0;
        GradField grad;
        if (cfg.affine_objective == AffineObjective::kSlicedWasserstein) {
            const ProjectionSet proj = sample_projections(cfg.objective.projection_count, rng);
            std::tie(value, grad) = swd_value_and_gradient(moved, targets, proj);
        } else {
            std::tie(value, grad) = icp_value_and_gradient(moved, targets);
        }

        const auto [grad_A, grad_b] = affine_parameter_gradient(grad, q);
        std::vector<double> flat_grad(12);
        for (int i = 0; i < 9; ++i) flat_grad[i] = grad_A.m[i];
        flat_grad[9] = grad_b.x;
        flat_grad[10] = grad_b.y;
        flat_grad[11] = grad_b.z;

        state = flow_step(std::move(state), flat_grad, flow);
        history.records.push_back({k, value, ms_since(t0), std::nullopt, std::nullopt});
    }
    AffineTransform result = affine_from_flat(state.x);
    if (!result.all_finite()) throw numerical_error("affine registration produced non-finite transform");
    return {result, std::move(history)};
}

std::pair<std::vector<Vec3>, RegistrationHistory> register_nonrigid(const TriMesh& src,
                                                                    const TriMesh& tgt,
                                                                    const RegistrationConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    RngStream rng(cfg.seed);
    const std::size_t n = src.vertex_count();
    const PointSet rest = vertex_measure(src);
    const AdjacencyList adj = adjacency(src);

    PointSet x = rest;
    if (cfg.com_align) {
        const Vec3 shift = tgt.vertex_mean() - src.vertex_mean();
        for (Vec3& p : x.points) p += shift;
    }
    ParticleState state = ParticleState::init(flatten(x.points), 3);

    const long k_total = cfg.k_sw + cfg.k_cham;
    ObjectiveConfig obj = cfg.objective;
    FlowConfig flow = cfg.flow;
    const bool start_in_sw = cfg.k_sw > 0;
    obj.lambda_sw = start_in_sw ? 1.0 : 0.0;
    obj.lambda_cham = start_in_sw ? 0.0 : 1.0;
    flow.eta = start_in_sw ? cfg.eta_sw : cfg.eta_cham;

    RegistrationHistory history;
    history.records.reserve(static_cast<std::size_t>(k_total));
    ProjectionSet proj;  // empty while the sliced term is off

    for (long k = 0; k < k_total; ++k) {
        if (k == cfg.k_sw && start_in_sw) {
            // Phase switch: local refinement with fresh moments.
            obj.lambda_sw = 0.0;
            obj.lambda_cham = 1.0;
            flow.eta = cfg.eta_cham;
            state.reset_moments();
            proj.dirs.clear();
        }
        if (cfg.step_probe) cfg.step_probe(k, state);
        const PointSet targets = sample_surface(tgt, n, rng);
        if (k < cfg.k_sw) proj = sample_projections(obj.projection_count, rng);

        x.points = unflatten3(state.x);
        const auto [value, grad] = hybrid_value_and_gradient(x, rest, targets, adj, proj, obj);
        state = flow_step(std::move(state), flatten(grad), flow);

        HistoryRecord rec{k, value, ms_since(t0), std::nullopt, std::nullopt};
        if (cfg.metrics_every > 0 && (k + 1) % cfg.metrics_every == 0) {
            TriMesh deformed(unflatten3(state.x), src.faces());
            RngStream metric_rng = rng.derive(0x5E + static_cast<std::uint64_t>(k));
            const auto rep = surface_errors(deformed, tgt, cfg.metrics_samples, metric_rng);
            rec.assd = rep.assd;
            rec.hd90 = rep.hd90;
        }
        history.records.push_back(rec);
    }

    const std::vector<Vec3> final_x = unflatten3(state.x);
    std::vector<Vec3> displacement(n);
    for (std::size_t i = 0; i < n; ++i) {
        displacement[i] = final_x[i] - rest[i];
        if (!is_finite(displacement[i]))
            throw numerical_error("non-finite displacement at vertex " + std::to_string(i));
    }
    return {std::move(displacement), std::move(history)};
}

}  // namespace swflow
