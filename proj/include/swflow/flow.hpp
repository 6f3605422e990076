// Particle-based optimisers over empirical measures: plain gradient flow,
// heavy-ball, Nesterov, and the adaptive-moment flow, plus a high-accuracy
// ODE reference integrator used as an oracle.
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "swflow/discrepancy.hpp"
#include "swflow/geometry.hpp"
#include "swflow/vec3.hpp"

namespace swflow {

enum class FlowMethod { kWgf, kHbf, kNesterov, kAdamFlow };

FlowMethod parse_flow_method(const std::string& name);
std::string flow_method_name(FlowMethod m);

struct FlowConfig {
    FlowMethod method = FlowMethod::kAdamFlow;
    double alpha = 0.9;       // first-moment EMA decay
    double beta = 0.95;       // second-moment EMA decay
    double epsilon = 1e-10;   // stabiliser outside the square root
    double eta = 1e-2;        // learning rate
    double step_size = 1.0;   // forward-Euler h
    long steps = 1500;        // K
    double damping = 0.9;     // heavy-ball a

    void validate() const;
    // Descent guarantee condition for the adaptive flow: 4*alpha - beta < 3.
    bool descent_condition_ok() const { return 4.0 * alpha - beta < 3.0; }
};

// N particles of dimension `dim` carrying position X, first moment M and
// second moment V (elementwise), all flattened row-major. M = V = 0 at k = 0;
// V stays non-negative by construction.
struct ParticleState {
    std::vector<double> x, m, v;
    int dim = 1;
    long k = 0;

    static ParticleState init(std::vector<double> positions, int dim);
    std::size_t particle_count() const { return dim > 0 ? x.size() / dim : 0; }
    double time(double h) const { return h * static_cast<double>(k); }
    void reset_moments();
};

void particle_state_to_csv(const ParticleState& s, const std::string& path);
ParticleState particle_state_from_csv(const std::string& path);

// Bias-corrected update direction
//   g_t(m, v) = (m / (1 - e^{-(1-alpha) t})) / (sqrt(v / (1 - e^{-(1-beta) t})) + eps).
// Undefined at t <= 0 (first use is t = h after one step).
double bias_correction(double t, double alpha, double beta, double epsilon, double m, double v);

// One forward-Euler step of the adaptive-moment particle system:
//   M += h (1-alpha) (g - M);  V += h (1-beta) (g^2 - V);
//   X -= h eta g_{h(k+1)}(M, V);  k += 1.
ParticleState adamflow_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg);

// X -= h eta g. Moments untouched.
ParticleState wgf_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg);

// M += h (-a M - g);  X += h eta M.
ParticleState hbf_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg);

// M += h (-(3/t) M - g);  X += h eta M, with t clamped to at least h.
ParticleState nesterov_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg);

// Dispatch on cfg.method.
ParticleState flow_step(ParticleState s, const std::vector<double>& grad, const FlowConfig& cfg);

using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> x;

    const std::vector<double>& final_x() const { return x.back(); }
};

// RK4 integration of the continuous adaptive-moment system
//   m' = (1-alpha)(grad - m),  v' = (1-beta)(grad^2 - v),  x' = -eta g_t(m, v)
// from (x0, 0, 0) over [0, T] with `substeps` uniform steps. The x-velocity at
// t = 0 is taken as 0 (the correction quotient 0/0 at the initial instant);
// with substeps >> 1 this contributes O(T/substeps) once.
OdeTrajectory adam_ode_reference(const GradFn& grad_fn, const std::vector<double>& x0,
                                 const FlowConfig& cfg, double T, long substeps,
                                 long record_every = 1);

struct Potential {
    enum class Kind { kQuadratic, kRosenbrock2D } kind = Kind::kQuadratic;
    Vec3 center;  // quadratic bowl centre

    static Potential quadratic(const Vec3& center) { return {Kind::kQuadratic, center}; }
    static Potential rosenbrock2d() { return {Kind::kRosenbrock2D, {}}; }
};

double potential_value(const Potential& p, const Vec3& x);

// Elementwise gradient of the potential at each particle.
GradField potential_gradient(const Potential& p, const PointSet& points);

// Flatten/unflatten helpers between 3D fields and particle coordinates.
std::vector<double> flatten(const std::vector<Vec3>& v);
std::vector<double> flatten(const GradField& g);
std::vector<Vec3> unflatten3(const std::vector<double>& x);

}  // namespace swflow
