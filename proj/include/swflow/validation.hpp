// Independent numerical oracles: brute-force 1D transport, frozen-assignment
// finite differences, the discrete adaptive-moment reference iteration, and a
// named check suite the CLI exposes as `verify`.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swflow/discrepancy.hpp"
#include "swflow/flow.hpp"

namespace swflow {

struct FDSpec {
    double step = 1e-5;
    bool freeze_projections = true;  // stochastic choices held fixed across evaluations
    bool freeze_assignments = true;  // rank pairings / nearest neighbours held fixed
};

// Exhaustive minimum over all couplings of two equal-count scalar samples,
// (1/N) min_sigma sum (a_i - b_sigma(i))^2. Guarded to N <= 8.
double brute_force_w1d(const std::vector<double>& a, const std::vector<double>& b);

using Objective = std::function<double(const std::vector<double>&)>;

// Central differences per coordinate.
std::vector<double> finite_diff(const Objective& objective, const std::vector<double>& point,
                                const FDSpec& spec = {});

// The classic discrete adaptive-moment iteration with bias corrections
// 1 - alpha^{k+1}, 1 - beta^{k+1}. Returns positions x_0..x_K.
std::vector<std::vector<double>> discrete_adam_reference(const GradFn& grad_fn,
                                                         const std::vector<double>& x0,
                                                         double alpha, double beta, double epsilon,
                                                         double eta, long K);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Gradient mass constants relating each transport-velocity field to the
// finite-difference gradient of its matching scalar objective (see
// discrepancy.hpp). The checks below apply them and require relative
// agreement better than `tol`.
CheckResult check_w1d_brute_force(std::uint64_t seed, int instances = 200, double tol = 1e-9);
CheckResult check_swd_gradient(std::uint64_t seed, int instances = 20, double tol = 1e-4);
CheckResult check_chamfer_gradient(std::uint64_t seed, int instances = 20, double tol = 1e-4);
CheckResult check_icp_gradient(std::uint64_t seed, int instances = 20, double tol = 1e-4);
CheckResult check_laplacian_gradient(std::uint64_t seed, int instances = 20, double tol = 1e-4);
CheckResult check_potential_gradient(std::uint64_t seed, int instances = 20, double tol = 1e-6);
CheckResult check_affine_chain_rule(std::uint64_t seed, int instances = 20, double tol = 1e-4);
CheckResult check_adam_first_step();
CheckResult check_adam_richardson();
CheckResult check_adam_ode_tracking();
CheckResult check_adam_three_way();
CheckResult check_lyapunov_descent();
CheckResult check_moment_decay();

std::vector<CheckResult> run_all_checks(std::uint64_t seed);

}  // namespace swflow
