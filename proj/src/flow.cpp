#include "swflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "swflow/csvio.hpp"
#include "swflow/errors.hpp"

namespace swflow {

FlowMethod parse_flow_method(const std::string& name) {
    if (name == "wgf") return FlowMethod::kWgf;
    if (name == "hbf") return FlowMethod::kHbf;
    if (name == "nesterov") return FlowMethod::kNesterov;
    if (name == "adamflow") return FlowMethod::kAdamFlow;
    throw input_error("unknown flow method '" + name + "' (wgf, hbf, nesterov, adamflow)");
}

std::string flow_method_name(FlowMethod m) {
    switch (m) {
        case FlowMethod::kWgf: return "wgf";
        case FlowMethod::kHbf: return "hbf";
        case FlowMethod::kNesterov: return "nesterov";
        case FlowMethod::kAdamFlow: return "adamflow";
    }
    return "?";
}

void FlowConfig::validate() const {
    if (alpha < 0.0 || alpha >= 1.0 || beta < 0.0 || beta >= 1.0)
        throw input_error("flow: decay rates must lie in [0, 1)");
    if (epsilon <= 0.0) throw input_error("flow: epsilon must be > 0");
    if (eta <= 0.0) throw input_error("flow: learning rate must be > 0");
    if (step_size <= 0.0) throw input_error("flow: step size must be > 0");
    if (steps < 0) throw input_error("flow: step count must be >= 0");
    if (damping <= 0.0) throw input_error("flow: heavy-ball damping must be > 0");
    if (method == FlowMethod::kAdamFlow && !descent_condition_ok())
        std::fprintf(stderr,
                     "warning: decay rates alpha=%g beta=%g violate 4*alpha - beta < 3; "
                     "descent is not guaranteed\n",
                     alpha, beta);
}

ParticleState ParticleState::init(std::vector<double> positions, int dim) {
    if (dim <= 0) throw input_error("ParticleState: dim must be positive");
    if (positions.size() % static_cast<std::size_t>(dim) != 0)
        throw input_error("ParticleState: position size not divisible by dim");
    ParticleState s;
    s.dim = dim;
    s.m.assign(positions.size(), 0.0);
    s.v.assign(positions.size(), 0.0);
    s.x = std::move(positions);
    return s;
}

void ParticleState::reset_moments() {
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
}

void particle_state_to_csv(const ParticleState& s, const std::string& path) {
    std::string out = csv_row({"k", "i", "d", "x", "m", "v"});
    for (std::size_t i = 0; i < s.particle_count(); ++i)
        for (int d = 0; d < s.dim; ++d) {
            const std::size_t idx = i * s.dim + d;
            out += csv_row({std::to_string(s.k), std::to_string(i), std::to_string(d),
                            format_full(s.x[idx]), format_full(s.m[idx]), format_full(s.v[idx])});
        }
    write_file_atomic(path, out);
}

ParticleState particle_state_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open checkpoint: " + path);
    std::string line;
    std::getline(in, line);  // header
    ParticleState s;
    std::vector<double> xs, ms, vs;
    long k = 0;
    int max_d = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 6) throw input_error("bad checkpoint row: " + line);
        k = std::stol(cols[0]);
        max_d = std::max(max_d, std::stoi(cols[2]));
        xs.push_back(std::stod(cols[3]));
        ms.push_back(std::stod(cols[4]));
        vs.push_back(std::stod(cols[5]));
    }
    s = ParticleState::init(std::move(xs), max_d + 1);
    s.m = std::move(ms);
    s.v = std::move(vs);
    s.k = k;
    return s;
}

double bias_correction(double t, double alpha, double beta, double epsilon, double m, double v) {
    if (t <= 0.0) throw input_error("bias_correction: undefined at t <= 0");
    const double cm = 1.0 - std::exp(-(1.0 - alpha) * t);
    const double cv = 1.0 - std::exp(-(1.0 - beta) * t);
    return (m / cm) / (std::sqrt(v / cv) + epsilon);
}

namespace {

void check_gradient(const ParticleState& s, const std::vector<double>& grad) {
    if (grad.size() != s.x.size())
        throw input_error("flow step: gradient size " + std::to_string(grad.size()) +
                          " does not match state size " + std::to_string(s.x.size()));
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw numerical_error("non-finite gradient at particle " +
                                  std::to_string(i / static_cast<std::size_t>(s.dim)) +
                                  " (component " + std::to_string(i % static_cast<std::size_t>(s.dim)) +
                                  ", step " + std::to_string(s.k) + ")");
}

}  // namespace

ParticleState adamflow_step(ParticleState s, const std::vector<double>& grad,
                            const FlowConfig& cfg) {
    check_gradient(s, grad);
    const double h = cfg.step_size;
    const double t_next = h * static_cast<double>(s.k + 1);
    const double cm = 1.0 - std::exp(-(1.0 - cfg.alpha) * t_next);
    const double cv = 1.0 - std::exp(-(1.0 - cfg.beta) * t_next);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        s.m[i] += h * (1.0 - cfg.alpha) * (grad[i] - s.m[i]);
        s.v[i] += h * (1.0 - cfg.beta) * (grad[i] * grad[i] - s.v[i]);
        const double g = (s.m[i] / cm) / (std::sqrt(s.v[i] / cv) + cfg.epsilon);
        s.x[i] -= h * cfg.eta * g;
    }
    ++s.k;
    return s;
}

ParticleState wgf_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg) {
    check_gradient(s, grad);
    const double scale = cfg.step_size * cfg.eta;
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= scale * grad[i];
    ++s.k;
    return s;
}

ParticleState hbf_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg) {
    check_gradient(s, grad);
    const double h = cfg.step_size;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        s.m[i] += h * (-cfg.damping * s.m[i] - grad[i]);
        s.x[i] += h * cfg.eta * s.m[i];
    }
    ++s.k;
    return s;
}

ParticleState nesterov_step(ParticleState s, const std::vector<double>& grad,
                            const FlowConfig& cfg) {
    check_gradient(s, grad);
    const double h = cfg.step_size;
    // 3/t damping, with t clamped away from the t = 0 singularity.
    const double t = std::max(h * static_cast<double>(s.k), h);
    const double damping = 3.0 / t;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        s.m[i] += h * (-damping * s.m[i] - grad[i]);
        s.x[i] += h * cfg.eta * s.m[i];
    }
    ++s.k;
    return s;
}

ParticleState flow_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg) {
    switch (cfg.method) {
        case FlowMethod::kWgf: return wgf_step(std::move(s), grad, cfg);
        case FlowMethod::kHbf: return hbf_step(std::move(s), grad, cfg);
        case FlowMethod::kNesterov: return nesterov_step(std::move(s), grad, cfg);
        case FlowMethod::kAdamFlow: return adamflow_step(std::move(s), grad, cfg);
    }
    throw input_error("flow_step: bad method");
}

OdeTrajectory adam_ode_reference(const GradFn& grad_fn, const std::vector<double>& x0,
                                 const FlowConfig& cfg, double T, long substeps,
                                 long record_every) {
    if (substeps <= 0) throw input_error("adam_ode_reference: substeps must be positive");
    if (record_every <= 0) record_every = 1;
    const std::size_t d = x0.size();
    std::vector<double> x = x0, m(d, 0.0), v(d, 0.0);

    struct Deriv {
        std::vector<double> dx, dm, dv;
    };
    auto rhs = [&](double t, const std::vector<double>& xs, const std::vector<double>& ms,
                   const std::vector<double>& vs) {
        Deriv out{std::vector<double>(d), std::vector<double>(d), std::vector<double>(d)};
        const std::vector<double> g = grad_fn(xs);
        for (std::size_t i = 0; i < d; ++i) {
            out.dm[i] = (1.0 - cfg.alpha) * (g[i] - ms[i]);
            out.dv[i] = (1.0 - cfg.beta) * (g[i] * g[i] - vs[i]);
            if (t <= 0.0) {
                out.dx[i] = 0.0;
            } else {
                const double vv = std::max(vs[i], 0.0);
                out.dx[i] = -cfg.eta *
                            bias_correction(t, cfg.alpha, cfg.beta, cfg.epsilon, ms[i], vv);
            }
        }
        return out;
    };

    OdeTrajectory traj;
    traj.times.push_back(0.0);
    traj.x.push_back(x);
    const double dt = T / static_cast<double>(substeps);
    double t = 0.0;
    std::vector<double> xt(d), mt(d), vt(d);
    for (long step = 0; step < substeps; ++step) {
        const Deriv k1 = rhs(t, x, m, v);
        for (std::size_t i = 0; i < d; ++i) {
            xt[i] = x[i] + 0.5 * dt * k1.dx[i];
            mt[i] = m[i] + 0.5 * dt * k1.dm[i];
            vt[i] = v[i] + 0.5 * dt * k1.dv[i];
        }
        const Deriv k2 = rhs(t + 0.5 * dt, xt, mt, vt);
        for (std::size_t i = 0; i < d; ++i) {
            xt[i] = x[i] + 0.5 * dt * k2.dx[i];
            mt[i] = m[i] + 0.5 * dt * k2.dm[i];
            vt[i] = v[i] + 0.5 * dt * k2.dv[i];
        }
        const Deriv k3 = rhs(t + 0.5 * dt, xt, mt, vt);
        for (std::size_t i = 0; i < d; ++i) {
            xt[i] = x[i] + dt * k3.dx[i];
            mt[i] = m[i] + dt * k3.dm[i];
            vt[i] = v[i] + dt * k3.dv[i];
        }
        const Deriv k4 = rhs(t + dt, xt, mt, vt);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] += dt / 6.0 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
            m[i] += dt / 6.0 * (k1.dm[i] + 2.0 * k2.dm[i] + 2.0 * k3.dm[i] + k4.dm[i]);
            v[i] += dt / 6.0 * (k1.dv[i] + 2.0 * k2.dv[i] + 2.0 * k3.dv[i] + k4.dv[i]);
        }
        t += dt;
        if ((step + 1) % record_every == 0 || step + 1 == substeps) {
            traj.times.push_back(t);
            traj.x.push_back(x);
        }
    }
    return traj;
}

double potential_value(const Potential& p, const Vec3& x) {
    switch (p.kind) {
        case Potential::Kind::kQuadratic: {
            return 0.5 * norm2(x - p.center);
        }
        case Potential::Kind::kRosenbrock2D: {
            const double a = 1.0 - x.x;
            const double b = x.y - x.x * x.x;
            return a * a + 100.0 * b * b;
        }
    }
    return 0.0;
}

GradField potential_gradient(const Potential& p, const PointSet& points) {
    GradField out;
    out.values.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& x = points[i];
        if (!is_finite(x)) throw input_error("potential_gradient: non-finite point");
        switch (p.kind) {
            case Potential::Kind::kQuadratic:
                out[i] = x - p.center;
                break;
            case Potential::Kind::kRosenbrock2D: {
                const double b = x.y - x.x * x.x;
                out[i] = {-2.0 * (1.0 - x.x) - 400.0 * x.x * b, 200.0 * b, 0.0};
                break;
            }
        }
    }
    return out;
}

std::vector<double> flatten(const std::vector<Vec3>& v) {
    std::vector<double> out;
    out.reserve(3 * v.size());
    for (const Vec3& p : v) {
        out.push_back(p.x);
        out.push_back(p.y);
        out.push_back(p.z);
    }
    return out;
}

std::vector<double> flatten(const GradField& g) { return flatten(g.values); }

std::vector<Vec3> unflatten3(const std::vector<double>& x) {
    if (x.size() % 3 != 0) throw input_error("unflatten3: size not divisible by 3");
    std::vector<Vec3> out(x.size() / 3);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
    return out;
}

}  // namespace swflow
