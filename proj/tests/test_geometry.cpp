#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "swflow/errors.hpp"
#include "swflow/geometry.hpp"

using namespace swflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path d = fs::temp_directory_path() / "swflow_geom_test";
    fs::create_directories(d);
    return d;
}

TriMesh unit_tetrahedron() {
    return TriMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                   {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}});
}

}  // namespace

TEST_CASE("minimal OBJ loads") {
    const fs::path p = temp_dir() / "tri.obj";
    std::ofstream(p) << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    const TriMesh m = load_mesh(p.string());
    CHECK(m.vertex_count() == 3);
    CHECK(m.face_count() == 1);
}

TEST_CASE("quad face is rejected with a line number") {
    const fs::path p = temp_dir() / "quad.obj";
    std::ofstream(p) << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    try {
        load_mesh(p.string());
        FAIL("expected parse error");
    } catch (const input_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("non-triangular") != std::string::npos);
        CHECK(msg.find(":5") != std::string::npos);
    }
}

TEST_CASE("empty mesh and missing file errors") {
    const fs::path p = temp_dir() / "empty.obj";
    std::ofstream(p) << "# nothing here\n";
    CHECK_THROWS_AS(load_mesh(p.string()), input_error);
    CHECK_THROWS_AS(load_mesh((temp_dir() / "nope.obj").string()), input_error);
}

TEST_CASE("save/load round-trip is bit exact (OBJ and PLY)") {
    RngStream rng(42);
    const TriMesh m = make_synthetic(SyntheticShape::perturbed_sphere(0.3, 2.0), 2, rng);
    for (const char* name : {"rt.obj", "rt.ply"}) {
        const fs::path p = temp_dir() / name;
        save_mesh(m, p.string());
        const TriMesh back = load_mesh(p.string());
        REQUIRE(back.vertex_count() == m.vertex_count());
        REQUIRE(back.face_count() == m.face_count());
        for (std::size_t i = 0; i < m.vertex_count(); ++i) CHECK(back.vertices()[i] == m.vertices()[i]);
        CHECK(back.faces() == m.faces());
    }
}

TEST_CASE("save to nonexistent directory fails") {
    CHECK_THROWS_AS(save_mesh(unit_tetrahedron(), "/nonexistent_dir_xyz/mesh.obj"), input_error);
}

TEST_CASE("tetrahedron OBJ structure counts") {
    const fs::path p = temp_dir() / "tet.obj";
    save_mesh(unit_tetrahedron(), p.string());
    std::ifstream in(p);
    std::string line;
    int v = 0, f = 0;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == 4);
    CHECK(f == 4);
}

TEST_CASE("mesh invariants are enforced") {
    CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}}, {{0, 1, 1}}), input_error);  // repeated index
    CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 3}}), input_error);
    // zero area: all three points collinear
    CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), input_error);
}

TEST_CASE("vertex_measure preserves order and duplicates") {
    TriMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 0}}, {{0, 1, 2}, {3, 1, 2}});
    const PointSet ps = vertex_measure(m);
    REQUIRE(ps.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(ps[i] == m.vertices()[i]);
    CHECK(ps[0] == ps[3]);  // duplicate retained
}

TEST_CASE("sample_surface stays on a single triangle and respects areas") {
    TriMesh tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    RngStream rng(7);
    const PointSet ps = sample_surface(tri, 500, rng);
    for (const Vec3& p : ps.points) {
        CHECK(p.z == doctest::Approx(0.0));
        CHECK(p.x >= -1e-12);
        CHECK(p.y >= -1e-12);
        CHECK(p.x + p.y <= 1.0 + 1e-12);
    }

    // Two triangles with areas 1 and 3: the larger receives ~3/4 of samples.
    TriMesh two({{0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {-6, 0, 0}, {0, -1, 0}},
                {{0, 1, 2}, {0, 3, 4}});
    CHECK(two.face_areas()[0] == doctest::Approx(1.0));
    CHECK(two.face_areas()[1] == doctest::Approx(3.0));
    RngStream rng2(123);
    const std::size_t n = 100000;
    const PointSet s2 = sample_surface(two, n, rng2);
    std::size_t larger = 0;
    for (const Vec3& p : s2.points)
        if (p.x < 0) ++larger;
    const double frac = static_cast<double>(larger) / static_cast<double>(n);
    CHECK(frac == doctest::Approx(0.75).epsilon(0.014));
}

namespace {

// Index of the face containing a point that lies on the mesh surface.
int locate_face(const TriMesh& m, const Vec3& p) {
    int best = -1;
    double best_d2 = 1e300;
    for (std::size_t f = 0; f < m.face_count(); ++f) {
        const auto& [ia, ib, ic] = m.faces()[f];
        const Vec3 a = m.vertices()[ia];
        const Vec3 u = m.vertices()[ib] - a, v = m.vertices()[ic] - a, w = p - a;
        const double uu = dot(u, u), vv = dot(v, v), uv = dot(u, v);
        const double det = uu * vv - uv * uv;
        const double beta = (dot(w, u) * vv - dot(w, v) * uv) / det;
        const double gamma = (dot(w, v) * uu - dot(w, u) * uv) / det;
        if (beta < -1e-9 || gamma < -1e-9 || beta + gamma > 1.0 + 1e-9) continue;
        const double d2 = norm2(w - beta * u - gamma * v);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(f);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("sample_surface face frequencies pass a chi-squared test") {
    // unequal face areas via an anisotropic ellipsoid
    RngStream mesh_rng(4);
    const TriMesh m = make_synthetic(SyntheticShape::ellipsoid_shape(1.8, 1.0, 0.6), 1, mesh_rng);
    const std::size_t n = 100000;
    RngStream rng(2024);
    const PointSet samples = sample_surface(m, n, rng);

    std::vector<double> counts(m.face_count(), 0.0);
    for (const Vec3& p : samples.points) {
        const int f = locate_face(m, p);
        REQUIRE(f >= 0);
        counts[static_cast<std::size_t>(f)] += 1.0;
    }
    const auto& areas = m.face_areas();
    double chi2 = 0.0;
    for (std::size_t f = 0; f < counts.size(); ++f) {
        const double expected = static_cast<double>(n) * areas[f] / m.total_area();
        chi2 += (counts[f] - expected) * (counts[f] - expected) / expected;
    }
    // p > 0.001 iff chi2 is below the 0.999 quantile (Wilson-Hilferty)
    const double df = static_cast<double>(counts.size() - 1);
    const double z = 3.0902;  // Phi^{-1}(0.999)
    const double q = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
    INFO("chi2 = " << chi2 << ", 0.999 quantile = " << q << ", df = " << df);
    CHECK(chi2 < q);
}

TEST_CASE("sample_surface is deterministic in the seed") {
    const TriMesh m = unit_tetrahedron();
    RngStream a(99), b(99), c(100);
    const PointSet pa = sample_surface(m, 64, a);
    const PointSet pb = sample_surface(m, 64, b);
    const PointSet pc = sample_surface(m, 64, c);
    CHECK(pa.points == pb.points);
    CHECK(pa.points != pc.points);
}

TEST_CASE("adjacency of a single triangle and a shared edge") {
    TriMesh tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const AdjacencyList adj = adjacency(tri);
    CHECK(adj[0] == std::vector<int>{1, 2});
    CHECK(adj[1] == std::vector<int>{0, 2});
    CHECK(adj[2] == std::vector<int>{0, 1});

    TriMesh two({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {1, 3, 2}});
    const AdjacencyList a2 = adjacency(two);
    CHECK(a2[1] == std::vector<int>{0, 2, 3});  // edge (1,2) deduplicated
    CHECK(a2[2] == std::vector<int>{0, 1, 3});
}

TEST_CASE("adjacency is symmetric without self-loops (property)") {
    RngStream rng(5);
    const TriMesh m = make_synthetic(SyntheticShape::perturbed_sphere(0.2, 2.0), 2, rng);
    const AdjacencyList adj = adjacency(m);
    std::size_t edges = 0;
    for (std::size_t i = 0; i < adj.size(); ++i) {
        for (int j : adj[i]) {
            CHECK(j != static_cast<int>(i));
            const auto& back = adj[static_cast<std::size_t>(j)];
            CHECK(std::find(back.begin(), back.end(), static_cast<int>(i)) != back.end());
            ++edges;
        }
    }
    CHECK(edges == 2 * m.edge_count());
}

TEST_CASE("icosahedron adjacency: every vertex has 5 neighbours") {
    RngStream rng(0);
    const TriMesh ico = make_synthetic(SyntheticShape::sphere(), 0, rng);
    // brute-force edge enumeration as the oracle
    std::set<std::pair<int, int>> edges;
    for (const auto& f : ico.faces())
        for (int e = 0; e < 3; ++e)
            edges.emplace(std::min(f[e], f[(e + 1) % 3]), std::max(f[e], f[(e + 1) % 3]));
    std::map<int, int> valence;
    for (const auto& [a, b] : edges) {
        ++valence[a];
        ++valence[b];
    }
    const AdjacencyList adj = adjacency(ico);
    for (std::size_t i = 0; i < adj.size(); ++i) {
        CHECK(adj[i].size() == 5);
        CHECK(static_cast<int>(adj[i].size()) == valence[static_cast<int>(i)]);
    }
}

TEST_CASE("icosphere counts and Euler characteristic") {
    RngStream rng(0);
    const TriMesh ico = make_synthetic(SyntheticShape::sphere(), 0, rng);
    CHECK(ico.vertex_count() == 12);
    CHECK(ico.face_count() == 20);

    const TriMesh s2 = make_synthetic(SyntheticShape::sphere(), 2, rng);
    CHECK(s2.vertex_count() == 162);
    CHECK(s2.face_count() == 320);

    for (int sub = 0; sub <= 3; ++sub) {
        const TriMesh m = make_synthetic(SyntheticShape::sphere(), sub, rng);
        const long euler = static_cast<long>(m.vertex_count()) -
                           static_cast<long>(m.edge_count()) + static_cast<long>(m.face_count());
        CHECK(euler == 2);
    }
}

TEST_CASE("icosphere is consistently oriented outward") {
    RngStream rng(0);
    const TriMesh m = make_synthetic(SyntheticShape::sphere(), 1, rng);
    for (const auto& [i, j, k] : m.faces()) {
        const Vec3 a = m.vertices()[i], b = m.vertices()[j], c = m.vertices()[k];
        const Vec3 n = cross(b - a, c - a);
        CHECK(dot(n, (a + b + c) / 3.0) > 0.0);
    }
}

TEST_CASE("ellipsoid bounding box has the requested axis ratios") {
    RngStream rng(0);
    const TriMesh m = make_synthetic(SyntheticShape::ellipsoid_shape(2.0, 1.0, 1.0), 2, rng);
    Vec3 lo, hi;
    m.bounding_box(lo, hi);
    CHECK(hi.x - lo.x == doctest::Approx(2.0 * (hi.y - lo.y)).epsilon(1e-12));
    CHECK(hi.y - lo.y == doctest::Approx(hi.z - lo.z).epsilon(1e-12));
}

TEST_CASE("synthetic meshes are deterministic in the seed") {
    RngStream a(31), b(31);
    const TriMesh ma = make_synthetic(SyntheticShape::perturbed_sphere(0.4, 1.5), 2, a);
    const TriMesh mb = make_synthetic(SyntheticShape::perturbed_sphere(0.4, 1.5), 2, b);
    CHECK(ma.vertices() == mb.vertices());
}

TEST_CASE("shape spec parsing") {
    CHECK(SyntheticShape::parse("sphere").kind == SyntheticShape::Kind::kSphere);
    const auto e = SyntheticShape::parse("ellipsoid:1.3,0.8,1.0");
    CHECK(e.ellipsoid.a == doctest::Approx(1.3));
    CHECK(e.ellipsoid.c == doctest::Approx(1.0));
    const auto p = SyntheticShape::parse("perturbed:0.35,2");
    CHECK(p.perturbed.amplitude == doctest::Approx(0.35));
    CHECK_THROWS_AS(SyntheticShape::parse("torus"), input_error);
    CHECK_THROWS_AS(SyntheticShape::parse("ellipsoid:1,2"), input_error);
}

TEST_CASE("rng streams are reproducible and forkable") {
    RngStream a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    RngStream c1 = a.derive(1), c2 = a.derive(2);
    CHECK(c1.next_u64() != c2.next_u64());
    // sphere sampling is isotropic: the mean of many directions is ~0
    RngStream d(11);
    Vec3 mean;
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += d.unit_vector();
    CHECK(norm(mean / n) < 0.01);
}
