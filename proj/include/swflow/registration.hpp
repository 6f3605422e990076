// End-to-end affine and coarse-to-fine non-rigid registration drivers.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swflow/discrepancy.hpp"
#include "swflow/flow.hpp"
#include "swflow/geometry.hpp"
#include "swflow/vec3.hpp"

namespace swflow {

struct AffineTransform {
    Mat3 A = Mat3::identity();
    Vec3 b;

    Vec3 apply(const Vec3& p) const { return A * p + b; }
    bool all_finite() const { return is_finite(A) && is_finite(b); }
};

// compose(T2, T1): first T1, then T2 — (A2*A1, A2*b1 + b2).
AffineTransform compose(const AffineTransform& second, const AffineTransform& first);

TriMesh apply_affine(const TriMesh& mesh, const AffineTransform& t);

// Identity rotation/scale, translation matching the vertex means.
AffineTransform center_align(const TriMesh& src, const TriMesh& tgt);

// Moment bookkeeping for the 12 affine parameters, stored as one flattened
// particle (A row-major, then b) inside the generic steppers.
struct AffineMomentState {
    Mat3 m_A, v_A;
    Vec3 m_b, v_b;
    long k = 0;

    static AffineMomentState from_particle(const ParticleState& s);
};

AffineTransform affine_from_flat(const std::vector<double>& x);
std::vector<double> affine_to_flat(const AffineTransform& t);

enum class AffineObjective { kSlicedWasserstein, kNearestNeighbor };

struct RegistrationConfig {
    FlowConfig flow;
    ObjectiveConfig objective{/*lambda_cham=*/0.0, /*lambda_sw=*/1.0,
                              /*lambda_lap=*/2.0, /*projection_count=*/4};
    long k_affine = 1500;
    long k_sw = 500;
    long k_cham = 200;
    double eta_sw = 0.5;
    double eta_cham = 0.1;
    std::uint64_t seed = 0;
    bool com_align = true;  // centre-of-mass pre-alignment (non-rigid)
    AffineObjective affine_objective = AffineObjective::kSlicedWasserstein;
    // When > 0, surface errors are recorded every this many steps.
    long metrics_every = 0;
    std::size_t metrics_samples = 10000;
    // Observer invoked at the top of every iteration (after any phase switch),
    // before the step is taken. Used by tests and instrumentation.
    std::function<void(long, const ParticleState&)> step_probe;

    void validate() const;
};

// Named presets: per-organ schedules plus desk-scale synthetic ones
// ("liver", "pancreas", "left-ventricle", "synth-affine", "synth-nonrigid").
// Sets schedule counts and the per-method learning rates.
RegistrationConfig preset_config(const std::string& name, FlowMethod method);
std::vector<std::string> preset_names();

// Per-method learning rates for the affine and non-rigid tasks.
double preset_affine_eta(FlowMethod method, AffineObjective objective);
void preset_nonrigid_etas(FlowMethod method, double& eta_sw, double& eta_cham);

struct HistoryRecord {
    long step = 0;
    double objective = 0.0;
    double elapsed_ms = 0.0;
    std::optional<double> assd;
    std::optional<double> hd90;
};

struct RegistrationHistory {
    std::vector<HistoryRecord> records;

    void to_csv(const std::string& path) const;
};

// Affine registration: per step, resample N = |V_src| target surface points,
// push source vertices through (A, b), evaluate the objective gradient at the
// particles, chain it onto the 12 affine parameters
//   grad A = (1/N) sum_i g_i q_i^T,  grad b = (1/N) sum_i g_i,
// and advance with the configured stepper.
std::pair<AffineTransform, RegistrationHistory> register_affine(const TriMesh& src,
                                                                const TriMesh& tgt,
                                                                const RegistrationConfig& cfg);

// Non-rigid registration, coarse to fine: a sliced-Wasserstein phase of k_sw
// steps at eta_sw, then moments reset to zero and a Chamfer phase of k_cham
// steps at eta_cham. The Laplacian term stays active in both phases.
// Returns per-vertex displacements x_K - q_0.
std::pair<std::vector<Vec3>, RegistrationHistory> register_nonrigid(const TriMesh& src,
                                                                    const TriMesh& tgt,
                                                                    const RegistrationConfig& cfg);

// The chain-rule gradients of one affine step, exposed for verification.
std::pair<Mat3, Vec3> affine_parameter_gradient(const GradField& particle_grad,
                                                const std::vector<Vec3>& source_vertices);

}  // namespace swflow
