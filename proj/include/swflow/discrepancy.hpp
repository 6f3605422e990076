// Discrepancy functionals between point measures and their particle-level
// gradients: sliced Wasserstein, Chamfer, one-directional nearest-neighbour
// matching, and the mesh Laplacian regulariser.
//
// Gradient convention: each *_gradient routine returns the transport-velocity
// field evaluated at the source particles. The correspondence with the plain
// Euclidean derivative of the matching value is a single documented mass
// factor per functional (see validation::gradient mass constants):
//   sliced Wasserstein / nearest-neighbour: field = N_src * d(value)/dx
//   Chamfer:                                field = N_src * d(value)/dx
//   Laplacian (uniform valence):            field = (1/2) * d(energy)/dx
#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "swflow/geometry.hpp"
#include "swflow/rng.hpp"
#include "swflow/vec3.hpp"

namespace swflow {

// L unit projection directions on S^2.
struct ProjectionSet {
    std::vector<Vec3> dirs;

    std::size_t size() const { return dirs.size(); }
    const Vec3& operator[](std::size_t i) const { return dirs[i]; }
};

ProjectionSet sample_projections(std::size_t count, RngStream& rng);

// Monotone rank pairing between two equal-count scalar samples. pair_to[i] is
// the target index coupled with source index i.
struct Transport1D {
    std::vector<int> pair_to;
    std::vector<double> src_values;
    std::vector<double> tgt_values;
};

// Squared 2-Wasserstein distance between equal-count 1D empirical measures,
// (1/N) sum_r (a_(r) - b_(r))^2, with the sorted-rank coupling. Ties are
// broken by original index (stable), so the map is deterministic.
std::pair<double, Transport1D> wasserstein_1d(const std::vector<double>& a,
                                              const std::vector<double>& b);

// One 3-vector per source point.
struct GradField {
    std::vector<Vec3> values;

    std::size_t size() const { return values.size(); }
    const Vec3& operator[](std::size_t i) const { return values[i]; }
    Vec3& operator[](std::size_t i) { return values[i]; }

    GradField& scaled_add(double lambda, const GradField& other);
    bool all_finite() const;
};

void gradfield_to_csv(const GradField& field, const std::string& path);

struct ObjectiveConfig {
    double lambda_cham = 0.0;
    double lambda_sw = 1.0;
    double lambda_lap = 0.0;
    std::size_t projection_count = 4;

    void validate() const;
};

// sqrt((1/L) sum_l W2^2 of the projected measures).
double sliced_wasserstein(const PointSet& src, const PointSet& tgt, const ProjectionSet& proj);

// Gradient of (1/2) SW2^2 at each source particle:
// (1/L) sum_l (theta^T x - T_theta(theta^T x)) theta.
GradField swd_gradient(const PointSet& src, const PointSet& tgt, const ProjectionSet& proj);

// Both of the above in one pass; value is (1/2) SW2^2.
std::pair<double, GradField> swd_value_and_gradient(const PointSet& src, const PointSet& tgt,
                                                    const ProjectionSet& proj);

// (1/2) mean_src d^2(x, tgt) + (1/2) mean_tgt d^2(x*, src); symmetric, counts
// may differ. Nearest neighbours via kd-tree, ties to the lowest index.
double chamfer(const PointSet& src, const PointSet& tgt);

// Forward pull toward each point's nearest target plus the reverse pull from
// every target point whose nearest source point is x_i:
//   g_i = (x_i - nn_tgt(x_i)) + (N_src/N_tgt) sum_{j: nn_src(t_j)=i} (x_i - t_j)
GradField chamfer_gradient(const PointSet& src, const PointSet& tgt);
std::pair<double, GradField> chamfer_value_and_gradient(const PointSet& src, const PointSet& tgt);

// Forward term only: (1/2) mean_src d^2(x, tgt).
double icp_objective(const PointSet& src, const PointSet& tgt);

// g_i = x_i - nn_tgt(x_i).
GradField icp_gradient(const PointSet& src, const PointSet& tgt);
std::pair<double, GradField> icp_value_and_gradient(const PointSet& src, const PointSet& tgt);

// sum_i (1/|A(i)|) sum_{j in A(i)} (1/2) |q_i - q_j + d_i - d_j|^2
double laplacian_energy(const PointSet& rest, const GradField& displacement,
                        const AdjacencyList& adj);

// g_i = (1/|A(i)|) sum_{j in A(i)} (q_i - q_j + d_i - d_j)
GradField laplacian_gradient(const PointSet& rest, const GradField& displacement,
                             const AdjacencyList& adj);

// lambda_cham * chamfer_gradient + lambda_sw * swd_gradient
// + lambda_lap * laplacian_gradient, with displacement = src - rest.
GradField hybrid_gradient(const PointSet& src, const PointSet& rest, const PointSet& tgt,
                          const AdjacencyList& adj, const ProjectionSet& proj,
                          const ObjectiveConfig& cfg);

// Weighted objective value matching hybrid_gradient's terms; the sliced
// Wasserstein enters as (lambda_sw/2) SW2^2.
std::pair<double, GradField> hybrid_value_and_gradient(const PointSet& src, const PointSet& rest,
                                                       const PointSet& tgt, const AdjacencyList& adj,
                                                       const ProjectionSet& proj,
                                                       const ObjectiveConfig& cfg);

}  // namespace swflow
