#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "swflow/discrepancy.hpp"
#include "swflow/errors.hpp"
#include "swflow/geometry.hpp"
#include "swflow/validation.hpp"

using namespace swflow;

namespace {

PointSet pts(std::initializer_list<Vec3> v) { return PointSet{std::vector<Vec3>(v)}; }

ProjectionSet axes(std::initializer_list<Vec3> v) { return ProjectionSet{std::vector<Vec3>(v)}; }

PointSet gaussian_cloud(RngStream& rng, std::size_t n) {
    PointSet ps;
    for (std::size_t i = 0; i < n; ++i) ps.points.push_back(rng.normal3());
    return ps;
}

}  // namespace

TEST_CASE("sample_projections returns unit vectors at the default L = 4") {
    RngStream rng(3);
    const ProjectionSet p = sample_projections(4, rng);
    CHECK(p.size() == 4);
    for (const Vec3& d : p.dirs) CHECK(norm(d) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wasserstein_1d hand cases") {
    // {0,2} vs {1,3}: sorted pairing 0->1, 2->3, cost (1+1)/2 = 1
    const auto [w2, map] = wasserstein_1d({0, 2}, {1, 3});
    CHECK(w2 == doctest::Approx(1.0));
    CHECK(map.pair_to == std::vector<int>{0, 1});

    const auto same = wasserstein_1d({0.3, -1.2, 4.5}, {0.3, -1.2, 4.5});
    CHECK(same.first == doctest::Approx(0.0));

    CHECK(wasserstein_1d({0}, {5}).first == doctest::Approx(25.0));
    CHECK_THROWS_AS(wasserstein_1d({1, 2}, {1}), input_error);
}

TEST_CASE("wasserstein_1d ties break by original index") {
    const auto [w2, map] = wasserstein_1d({1.0, 1.0}, {1.0, 1.0});
    CHECK(w2 == doctest::Approx(0.0));
    CHECK(map.pair_to == std::vector<int>{0, 1});
}

TEST_CASE("wasserstein_1d matches the brute-force oracle on random instances") {
    RngStream rng(17);
    for (int it = 0; it < 200; ++it) {
        const std::size_t n = 2 + rng.next_u64() % 7;
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        CHECK(wasserstein_1d(a, b).first ==
              doctest::Approx(brute_force_w1d(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("sliced_wasserstein hand cases") {
    const PointSet a = pts({{0, 0, 0}});
    const PointSet b = pts({{1, 0, 0}});
    CHECK(sliced_wasserstein(a, a, axes({{1, 0, 0}})) == doctest::Approx(0.0));
    CHECK(sliced_wasserstein(a, b, axes({{1, 0, 0}})) == doctest::Approx(1.0));
    CHECK(sliced_wasserstein(a, b, axes({{0, 1, 0}})) == doctest::Approx(0.0));
}

TEST_CASE("sliced_wasserstein symmetry and translation invariance (property)") {
    RngStream rng(23);
    for (int it = 0; it < 10; ++it) {
        const std::size_t n = 3 + rng.next_u64() % 10;
        const PointSet a = gaussian_cloud(rng, n);
        const PointSet b = gaussian_cloud(rng, n);
        const ProjectionSet proj = sample_projections(3, rng);
        const double ab = sliced_wasserstein(a, b, proj);
        const double ba = sliced_wasserstein(b, a, proj);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));

        const Vec3 shift = rng.normal3();
        PointSet a2 = a, b2 = b;
        for (auto& p : a2.points) p += shift;
        for (auto& p : b2.points) p += shift;
        CHECK(sliced_wasserstein(a2, b2, proj) == doctest::Approx(ab).epsilon(1e-10));
    }
}

TEST_CASE("swd_gradient hand cases") {
    const PointSet a = pts({{1, 0, 0}});
    const PointSet b = pts({{0, 0, 0}});
    const GradField g = swd_gradient(a, b, axes({{1, 0, 0}}));
    CHECK(g[0].x == doctest::Approx(1.0));
    CHECK(g[0].y == doctest::Approx(0.0));

    // identical sets: transport is the identity on matched ranks
    RngStream rng(4);
    const PointSet c = gaussian_cloud(rng, 6);
    const GradField zero = swd_gradient(c, c, sample_projections(4, rng));
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(norm(zero[i]) == doctest::Approx(0.0));
}

TEST_CASE("swd_gradient matches frozen finite differences (oracle)") {
    const CheckResult r = check_swd_gradient(101, 20, 1e-4);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("chamfer hand cases and symmetry") {
    const PointSet a = pts({{0, 0, 0}});
    const PointSet b = pts({{1, 0, 0}, {0, 1, 0}});
    // forward: 1/2 * 1; reverse: 1/2 * (1+1)/2 -> total 1.0
    CHECK(chamfer(a, b) == doctest::Approx(1.0));
    CHECK(chamfer(b, a) == doctest::Approx(1.0));

    RngStream rng(9);
    const PointSet c = gaussian_cloud(rng, 8);
    const PointSet d = gaussian_cloud(rng, 5);
    CHECK(chamfer(c, d) == doctest::Approx(chamfer(d, c)).epsilon(1e-12));
    CHECK(chamfer(c, c) == doctest::Approx(0.0));
}

TEST_CASE("chamfer_gradient: single pair, both terms") {
    const PointSet src = pts({{0, 0, 0}});
    const PointSet tgt = pts({{2, 0, 0}});
    const GradField g = chamfer_gradient(src, tgt);
    // forward (0-2) plus reverse (0-2): the finite-difference oracle pins the
    // total at (-4, 0, 0) for this one-point instance.
    CHECK(g[0].x == doctest::Approx(-4.0));
    CHECK(g[0].y == doctest::Approx(0.0));

    RngStream rng(12);
    const PointSet c = gaussian_cloud(rng, 7);
    const GradField zero = chamfer_gradient(c, c);
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(norm(zero[i]) == doctest::Approx(0.0));
}

TEST_CASE("chamfer_gradient matches frozen finite differences (oracle)") {
    const CheckResult r = check_chamfer_gradient(102, 20, 1e-4);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("icp objective and gradient hand cases") {
    CHECK(icp_objective(pts({{0, 0, 0}}), pts({{3, 0, 0}})) == doctest::Approx(4.5));
    const PointSet a = pts({{0, 0, 0}, {10, 0, 0}});
    const PointSet b = pts({{0, 0, 0}});
    CHECK(icp_objective(a, b) == doctest::Approx(25.0));
    CHECK(icp_objective(b, a) == doctest::Approx(0.0));
    // forward halves of the symmetric distance add up to it exactly
    CHECK(icp_objective(a, b) + icp_objective(b, a) ==
          doctest::Approx(chamfer(a, b)).epsilon(1e-12));

    const GradField g = icp_gradient(pts({{1, 1, 0}}), pts({{0, 0, 0}}));
    CHECK(g[0].x == doctest::Approx(1.0));
    CHECK(g[0].y == doctest::Approx(1.0));

    RngStream rng(2);
    const PointSet c = gaussian_cloud(rng, 6);
    const GradField zero = icp_gradient(c, c);
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(norm(zero[i]) == doctest::Approx(0.0));
}

TEST_CASE("icp_gradient matches frozen finite differences (oracle)") {
    const CheckResult r = check_icp_gradient(103, 20, 1e-4);
    INFO(r.detail);
    CHECK(r.pass);
}

namespace {

AdjacencyList pair_adjacency() {
    AdjacencyList adj;
    adj.neighbors = {{1}, {0}};
    return adj;
}

GradField zero_disp(std::size_t n) {
    GradField g;
    g.values.assign(n, Vec3{});
    return g;
}

}  // namespace

TEST_CASE("laplacian energy hand cases") {
    const PointSet rest = pts({{0, 0, 0}, {1, 0, 0}});
    const AdjacencyList adj = pair_adjacency();
    CHECK(laplacian_energy(rest, zero_disp(2), adj) == doctest::Approx(1.0));

    // uniform displacement leaves the energy unchanged
    GradField uni = zero_disp(2);
    uni[0] = uni[1] = {3.0, -1.0, 2.0};
    CHECK(laplacian_energy(rest, uni, adj) == doctest::Approx(1.0));

    AdjacencyList lonely;
    lonely.neighbors = {{1}, {0}, {}};
    const PointSet rest3 = pts({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    CHECK_THROWS_AS(laplacian_energy(rest3, zero_disp(3), lonely), input_error);
}

TEST_CASE("laplacian energy is invariant to neighbour order") {
    const PointSet rest = pts({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
    GradField d = zero_disp(3);
    d[1] = {0.2, -0.1, 0.4};
    AdjacencyList a1, a2;
    a1.neighbors = {{1, 2}, {0, 2}, {0, 1}};
    a2.neighbors = {{2, 1}, {2, 0}, {1, 0}};
    CHECK(laplacian_energy(rest, d, a1) == doctest::Approx(laplacian_energy(rest, d, a2)));
}

TEST_CASE("laplacian gradient hand cases") {
    const PointSet rest = pts({{0, 0, 0}, {1, 0, 0}});
    const GradField g = laplacian_gradient(rest, zero_disp(2), pair_adjacency());
    CHECK(g[0].x == doctest::Approx(-1.0));
    CHECK(g[1].x == doctest::Approx(1.0));

    // symmetric ring: the centre vertex of a regular polygon has zero gradient
    const int n = 6;
    PointSet ring;
    AdjacencyList adj;
    ring.points.push_back({0, 0, 0});  // centre
    std::vector<int> rim;
    for (int i = 0; i < n; ++i) {
        const double th = 2.0 * M_PI * i / n;
        ring.points.push_back({std::cos(th), std::sin(th), 0});
        rim.push_back(i + 1);
    }
    adj.neighbors.push_back(rim);  // centre connects to all rim vertices
    for (int i = 0; i < n; ++i) adj.neighbors.push_back({0});
    const GradField gc = laplacian_gradient(ring, zero_disp(n + 1), adj);
    CHECK(norm(gc[0]) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("laplacian gradient is half the energy derivative at uniform valence (oracle)") {
    const CheckResult r = check_laplacian_gradient(104, 20, 1e-4);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("hybrid gradient reduces to its parts") {
    RngStream rng(77);
    const PointSet rest = gaussian_cloud(rng, 12);
    PointSet src = rest;
    for (auto& p : src.points) p += 0.1 * rng.normal3();
    const PointSet tgt = gaussian_cloud(rng, 12);
    const ProjectionSet proj = sample_projections(4, rng);

    // a straight line of vertices: neighbours left/right
    AdjacencyList adj;
    adj.neighbors.resize(12);
    for (int i = 0; i < 12; ++i) {
        if (i > 0) adj.neighbors[i].push_back(i - 1);
        if (i < 11) adj.neighbors[i].push_back(i + 1);
    }

    ObjectiveConfig sw_only{0.0, 1.0, 0.0, 4};
    const GradField g_sw = hybrid_gradient(src, rest, tgt, adj, proj, sw_only);
    const GradField ref_sw = swd_gradient(src, tgt, proj);
    for (std::size_t i = 0; i < g_sw.size(); ++i) CHECK(norm(g_sw[i] - ref_sw[i]) < 1e-14);

    ObjectiveConfig ch_only{1.0, 0.0, 0.0, 4};
    const GradField g_ch = hybrid_gradient(src, rest, tgt, adj, proj, ch_only);
    const GradField ref_ch = chamfer_gradient(src, tgt);
    for (std::size_t i = 0; i < g_ch.size(); ++i) CHECK(norm(g_ch[i] - ref_ch[i]) < 1e-14);

    ObjectiveConfig none{0.0, 0.0, 0.0, 4};
    const GradField g0 = hybrid_gradient(src, rest, tgt, adj, proj, none);
    for (std::size_t i = 0; i < g0.size(); ++i) CHECK(norm(g0[i]) == doctest::Approx(0.0));
}

TEST_CASE("gradient fields export as CSV") {
    GradField g;
    g.values = {{1.5, -2.0, 0.25}, {0.0, 3.0, -1.0}};
    const auto path =
        (std::filesystem::temp_directory_path() / "swflow_grad.csv").string();
    gradfield_to_csv(g, path);
    std::ifstream in(path);
    std::string header, row0;
    std::getline(in, header);
    std::getline(in, row0);
    CHECK(header.find("index,gx,gy,gz") != std::string::npos);
    CHECK(row0.find("0,1.5,-2,0.25") != std::string::npos);
}

TEST_CASE("nearest-neighbour ties resolve to the lowest index") {
    // query equidistant from two target points
    const PointSet tgt = pts({{1, 0, 0}, {-1, 0, 0}});
    const PointSet src = pts({{0, 0, 0}});
    const GradField g = icp_gradient(src, tgt);
    CHECK(g[0].x == doctest::Approx(-1.0));  // matched to index 0 at (1,0,0)
}
