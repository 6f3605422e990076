#include "swflow/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "swflow/errors.hpp"
#include "swflow/kdtree.hpp"
#include "swflow/threading.hpp"

namespace swflow {

double nearest_rank_percentile(std::vector<double> values, double q) {
    if (values.empty()) throw input_error("percentile of empty sample");
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(values.size())));
    const std::size_t idx = std::min(std::max<std::size_t>(rank, 1), values.size()) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx),
                     values.end());
    return values[idx];
}

SurfaceErrorReport surface_errors(const TriMesh& a, const TriMesh& b, std::size_t n,
                                  RngStream& rng) {
    if (n == 0) throw input_error("surface_errors: n must be >= 1");
    // Both meshes are sampled with the same derived stream (common random
    // numbers), so identical meshes give exactly zero error.
    const RngStream child = rng.derive(0x5u);
    RngStream rng_a = child, rng_b = child;
    const PointSet sa = sample_surface(a, n, rng_a);
    const PointSet sb = sample_surface(b, n, rng_b);

    const KdTree tree_a(sa.points);
    const KdTree tree_b(sb.points);
    std::vector<double> pooled(2 * n);
    parallel_for(n, [&](std::size_t i) { pooled[i] = std::sqrt(tree_b.nearest(sa[i]).dist2); });
    parallel_for(n, [&](std::size_t i) { pooled[n + i] = std::sqrt(tree_a.nearest(sb[i]).dist2); });

    SurfaceErrorReport rep;
    rep.n_samples = n;
    rep.seed = rng.seed();
    double sum = 0.0;
    for (double d : pooled) sum += d;
    rep.assd = sum / static_cast<double>(pooled.size());
    rep.hd90 = nearest_rank_percentile(std::move(pooled), 0.9);
    return rep;
}

double timing_probe(const std::string&, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

TimingStats repeat_timing(const std::string& label, const std::function<void()>& body, int repeats,
                          const std::function<void()>& setup) {
    if (repeats < 1) throw input_error("repeat_timing: repeats must be >= 1");
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        if (setup) setup();
        samples.push_back(timing_probe(label, body));
    }
    TimingStats st;
    st.repeats = repeats;
    double sum = 0.0;
    for (double s : samples) sum += s;
    st.mean_ms = sum / static_cast<double>(repeats);
    double var = 0.0;
    for (double s : samples) var += (s - st.mean_ms) * (s - st.mean_ms);
    st.std_ms = repeats > 1 ? std::sqrt(var / static_cast<double>(repeats - 1)) : 0.0;
    return st;
}

}  // namespace swflow
