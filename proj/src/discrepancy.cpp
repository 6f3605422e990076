#include "swflow/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "swflow/csvio.hpp"
#include "swflow/errors.hpp"
#include "swflow/kdtree.hpp"
#include "swflow/threading.hpp"

namespace swflow {

ProjectionSet sample_projections(std::size_t count, RngStream& rng) {
    if (count == 0) throw input_error("sample_projections: count must be >= 1");
    ProjectionSet out;
    out.dirs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.dirs.push_back(rng.unit_vector());
    return out;
}

std::pair<double, Transport1D> wasserstein_1d(const std::vector<double>& a,
                                              const std::vector<double>& b) {
    if (a.size() != b.size())
        throw input_error("wasserstein_1d: sample counts differ (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
    if (a.empty()) throw input_error("wasserstein_1d: empty samples");
    const std::size_t n = a.size();

    auto sorted_order = [](const std::vector<double>& vals) {
        std::vector<int> order(vals.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int i, int j) {
            return vals[i] < vals[j] || (vals[i] == vals[j] && i < j);
        });
        return order;
    };
    const std::vector<int> oa = sorted_order(a);
    const std::vector<int> ob = sorted_order(b);

    Transport1D map;
    map.pair_to.resize(n);
    map.src_values = a;
    map.tgt_values = b;
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        map.pair_to[oa[r]] = ob[r];
        const double d = a[oa[r]] - b[ob[r]];
        sum += d * d;
    }
    return {sum / static_cast<double>(n), std::move(map)};
}

GradField& GradField::scaled_add(double lambda, const GradField& other) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += lambda * other.values[i];
    return *this;
}

bool GradField::all_finite() const {
    for (const Vec3& v : values)
        if (!is_finite(v)) return false;
    return true;
}

void gradfield_to_csv(const GradField& field, const std::string& path) {
    std::string out = csv_row({"index", "gx", "gy", "gz"});
    for (std::size_t i = 0; i < field.size(); ++i)
        out += csv_row({std::to_string(i), format_full(field[i].x), format_full(field[i].y),
                        format_full(field[i].z)});
    write_file_atomic(path, out);
}

void ObjectiveConfig::validate() const {
    if (lambda_cham < 0 || lambda_sw < 0 || lambda_lap < 0)
        throw input_error("objective weights must be non-negative");
    if (projection_count == 0) throw input_error("projection count must be >= 1");
}

namespace {

std::vector<double> project(const PointSet& ps, const Vec3& dir) {
    std::vector<double> out(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) out[i] = dot(ps[i], dir);
    return out;
}

void check_equal_counts(const PointSet& src, const PointSet& tgt, const char* who) {
    if (src.size() != tgt.size())
        throw input_error(std::string(who) + ": point counts differ (" +
                          std::to_string(src.size()) + " vs " + std::to_string(tgt.size()) + ")");
    if (src.size() == 0) throw input_error(std::string(who) + ": empty point sets");
}

}  // namespace

std::pair<double, GradField> swd_value_and_gradient(const PointSet& src, const PointSet& tgt,
                                                    const ProjectionSet& proj) {
    check_equal_counts(src, tgt, "sliced_wasserstein");
    if (proj.size() == 0) throw input_error("sliced_wasserstein: no projections");
    const std::size_t n = src.size(), L = proj.size();
    // Per-projection transports run independently; the reduction below is
    // serial in projection order, then point order, so results are
    // reproducible bit-for-bit for any worker count.
    std::vector<double> w2(L);
    std::vector<std::vector<double>> residuals(L);
    parallel_for(
        L,
        [&](std::size_t l) {
            const Vec3& theta = proj[l];
            auto [dist2, map] = wasserstein_1d(project(src, theta), project(tgt, theta));
            w2[l] = dist2;
            residuals[l].resize(n);
            for (std::size_t i = 0; i < n; ++i)
                residuals[l][i] = map.src_values[i] - map.tgt_values[map.pair_to[i]];
        },
        /*min_parallel=*/2);
    GradField grad;
    grad.values.assign(n, Vec3{});
    double sum_w2 = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        sum_w2 += w2[l];
        const Vec3& theta = proj[l];
        for (std::size_t i = 0; i < n; ++i) grad[i] += residuals[l][i] * theta;
    }
    const double inv_l = 1.0 / static_cast<double>(L);
    for (Vec3& g : grad.values) g *= inv_l;
    return {0.5 * sum_w2 * inv_l, std::move(grad)};
}

double sliced_wasserstein(const PointSet& src, const PointSet& tgt, const ProjectionSet& proj) {
    check_equal_counts(src, tgt, "sliced_wasserstein");
    if (proj.size() == 0) throw input_error("sliced_wasserstein: no projections");
    double sum_w2 = 0.0;
    for (std::size_t l = 0; l < proj.size(); ++l)
        sum_w2 += wasserstein_1d(project(src, proj[l]), project(tgt, proj[l])).first;
    return std::sqrt(sum_w2 / static_cast<double>(proj.size()));
}

GradField swd_gradient(const PointSet& src, const PointSet& tgt, const ProjectionSet& proj) {
    return swd_value_and_gradient(src, tgt, proj).second;
}

namespace {

// Parallel nearest-neighbour queries into per-index slots; all floating-point
// reductions happen serially afterwards in index order.
std::vector<KdTree::Hit> all_nearest(const KdTree& tree, const PointSet& queries) {
    std::vector<KdTree::Hit> hits(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) { hits[i] = tree.nearest(queries[i]); });
    return hits;
}

}  // namespace

std::pair<double, GradField> chamfer_value_and_gradient(const PointSet& src, const PointSet& tgt) {
    if (src.size() == 0 || tgt.size() == 0) throw input_error("chamfer: empty point sets");
    const std::size_t ns = src.size(), nt = tgt.size();
    const KdTree tgt_tree(tgt.points);
    const KdTree src_tree(src.points);
    const auto fwd_hits = all_nearest(tgt_tree, src);
    const auto rev_hits = all_nearest(src_tree, tgt);

    GradField grad;
    grad.values.assign(ns, Vec3{});
    double fwd = 0.0, rev = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        fwd += fwd_hits[i].dist2;
        grad[i] += src[i] - tgt[fwd_hits[i].index];
    }
    const double rev_scale = static_cast<double>(ns) / static_cast<double>(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        const int i = rev_hits[j].index;
        rev += rev_hits[j].dist2;
        grad[i] += rev_scale * (src[i] - tgt[j]);
    }
    const double value = 0.5 * fwd / static_cast<double>(ns) + 0.5 * rev / static_cast<double>(nt);
    return {value, std::move(grad)};
}

double chamfer(const PointSet& src, const PointSet& tgt) {
    if (src.size() == 0 || tgt.size() == 0) throw input_error("chamfer: empty point sets");
    const KdTree tgt_tree(tgt.points);
    const KdTree src_tree(src.points);
    const auto fwd_hits = all_nearest(tgt_tree, src);
    const auto rev_hits = all_nearest(src_tree, tgt);
    double fwd = 0.0, rev = 0.0;
    for (const auto& h : fwd_hits) fwd += h.dist2;
    for (const auto& h : rev_hits) rev += h.dist2;
    return 0.5 * fwd / static_cast<double>(src.size()) + 0.5 * rev / static_cast<double>(tgt.size());
}

GradField chamfer_gradient(const PointSet& src, const PointSet& tgt) {
    return chamfer_value_and_gradient(src, tgt).second;
}

std::pair<double, GradField> icp_value_and_gradient(const PointSet& src, const PointSet& tgt) {
    if (src.size() == 0 || tgt.size() == 0) throw input_error("icp_objective: empty point sets");
    const KdTree tgt_tree(tgt.points);
    const auto hits = all_nearest(tgt_tree, src);
    GradField grad;
    grad.values.assign(src.size(), Vec3{});
    double fwd = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        fwd += hits[i].dist2;
        grad[i] = src[i] - tgt[hits[i].index];
    }
    return {0.5 * fwd / static_cast<double>(src.size()), std::move(grad)};
}

double icp_objective(const PointSet& src, const PointSet& tgt) {
    return icp_value_and_gradient(src, tgt).first;
}

GradField icp_gradient(const PointSet& src, const PointSet& tgt) {
    return icp_value_and_gradient(src, tgt).second;
}

namespace {

void check_laplacian_inputs(const PointSet& rest, const GradField& displacement,
                            const AdjacencyList& adj) {
    if (rest.size() != displacement.size() || rest.size() != adj.size())
        throw input_error("laplacian: rest/displacement/adjacency sizes differ");
    for (std::size_t i = 0; i < adj.size(); ++i)
        if (adj[i].empty())
            throw input_error("laplacian: vertex " + std::to_string(i) + " has no neighbours");
}

}  // namespace

double laplacian_energy(const PointSet& rest, const GradField& displacement,
                        const AdjacencyList& adj) {
    check_laplacian_inputs(rest, displacement, adj);
    double energy = 0.0;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const Vec3 di = rest[i] + displacement[i];
        double local = 0.0;
        for (int j : adj[i]) local += 0.5 * norm2(di - (rest[j] + displacement[j]));
        energy += local / static_cast<double>(adj[i].size());
    }
    return energy;
}

GradField laplacian_gradient(const PointSet& rest, const GradField& displacement,
                             const AdjacencyList& adj) {
    check_laplacian_inputs(rest, displacement, adj);
    GradField grad;
    grad.values.assign(rest.size(), Vec3{});
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const Vec3 di = rest[i] + displacement[i];
        Vec3 sum{};
        for (int j : adj[i]) sum += di - (rest[j] + displacement[j]);
        grad[i] = sum / static_cast<double>(adj[i].size());
    }
    return grad;
}

std::pair<double, GradField> hybrid_value_and_gradient(const PointSet& src, const PointSet& rest,
                                                       const PointSet& tgt, const AdjacencyList& adj,
                                                       const ProjectionSet& proj,
                                                       const ObjectiveConfig& cfg) {
    cfg.validate();
    if (src.size() != rest.size()) throw input_error("hybrid: src/rest sizes differ");
    GradField total;
    total.values.assign(src.size(), Vec3{});
    double value = 0.0;
    if (cfg.lambda_sw > 0.0) {
        auto [v, g] = swd_value_and_gradient(src, tgt, proj);
        value += cfg.lambda_sw * v;
        total.scaled_add(cfg.lambda_sw, g);
    }
    if (cfg.lambda_cham > 0.0) {
        auto [v, g] = chamfer_value_and_gradient(src, tgt);
        value += cfg.lambda_cham * v;
        total.scaled_add(cfg.lambda_cham, g);
    }
    if (cfg.lambda_lap > 0.0) {
        GradField disp;
        disp.values.resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) disp[i] = src[i] - rest[i];
        value += cfg.lambda_lap * laplacian_energy(rest, disp, adj);
        total.scaled_add(cfg.lambda_lap, laplacian_gradient(rest, disp, adj));
    }
    return {value, std::move(total)};
}

GradField hybrid_gradient(const PointSet& src, const PointSet& rest, const PointSet& tgt,
                          const AdjacencyList& adj, const ProjectionSet& proj,
                          const ObjectiveConfig& cfg) {
    return hybrid_value_and_gradient(src, rest, tgt, adj, proj, cfg).second;
}

}  // namespace swflow
