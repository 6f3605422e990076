// Surface-to-surface registration error metrics and timing helpers.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

#include "swflow/geometry.hpp"
#include "swflow/rng.hpp"

namespace swflow {

struct SurfaceErrorReport {
    double assd = 0.0;  // mean of pooled bidirectional nearest distances
    double hd90 = 0.0;  // 90th percentile (nearest-rank) of the pooled distances
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

// Samples n points on each mesh with a shared derived stream (common random
// numbers: identical meshes yield exactly zero error), then pools nearest
// distances in both directions between the sampled sets.
SurfaceErrorReport surface_errors(const TriMesh& a, const TriMesh& b, std::size_t n,
                                  RngStream& rng);

// Nearest-rank percentile: the ceil(q * n)-th smallest value. Consumes `values`.
double nearest_rank_percentile(std::vector<double> values, double q);

// Wall-clock milliseconds of `body` on a monotonic clock.
double timing_probe(const std::string& label, const std::function<void()>& body);

struct TimingStats {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    int repeats = 0;
};

// Mean and standard deviation over `repeats` runs; `setup` (if given) runs
// before each timed call and is excluded from the measurement.
TimingStats repeat_timing(const std::string& label, const std::function<void()>& body, int repeats,
                          const std::function<void()>& setup = {});

}  // namespace swflow
