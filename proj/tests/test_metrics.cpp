#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <thread>

#include "swflow/metrics.hpp"
#include "swflow/registration.hpp"

using namespace swflow;

namespace {

TriMesh sphere(int sub, double radius = 1.0) {
    RngStream rng(0);
    TriMesh m = make_synthetic(SyntheticShape::sphere(), sub, rng);
    if (radius != 1.0) {
        AffineTransform t;
        t.A = Mat3::diag(radius, radius, radius);
        m = apply_affine(m, t);
    }
    return m;
}

}  // namespace

TEST_CASE("identical meshes give exactly zero errors (shared stream)") {
    const TriMesh m = sphere(2);
    RngStream rng(5);
    const SurfaceErrorReport rep = surface_errors(m, m, 2000, rng);
    CHECK(rep.assd == 0.0);
    CHECK(rep.hd90 == 0.0);
    CHECK(rep.n_samples == 2000);
}

TEST_CASE("translated sphere: assd bounded by the translation") {
    const TriMesh a = sphere(3);
    AffineTransform t;
    t.b = {0.1, 0.0, 0.0};
    const TriMesh b = apply_affine(a, t);
    RngStream rng(7);
    const SurfaceErrorReport rep = surface_errors(a, b, 50000, rng);
    CHECK(rep.assd > 0.0);
    CHECK(rep.assd <= 0.1);
    CHECK(rep.hd90 <= 0.1 + 1e-9);
}

TEST_CASE("nearest-rank percentile on a known list") {
    std::vector<double> v{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
    CHECK(nearest_rank_percentile(v, 0.9) == doctest::Approx(9.0));
    CHECK(nearest_rank_percentile(v, 0.5) == doctest::Approx(5.0));
    CHECK(nearest_rank_percentile(std::vector<double>{3.0}, 0.9) == doctest::Approx(3.0));
}

TEST_CASE("surface errors are symmetric in the arguments") {
    const TriMesh a = sphere(2);
    RngStream mesh_rng(1);
    const TriMesh b = make_synthetic(SyntheticShape::ellipsoid_shape(1.2, 0.9, 1.0), 2, mesh_rng);
    RngStream r1(42), r2(42);
    const auto ab = surface_errors(a, b, 20000, r1);
    const auto ba = surface_errors(b, a, 20000, r2);
    // pooled statistics, but sample draws differ per mesh: allow Monte Carlo slack
    CHECK(ab.assd == doctest::Approx(ba.assd).epsilon(0.05));
    CHECK(ab.hd90 == doctest::Approx(ba.hd90).epsilon(0.05));
}

TEST_CASE("Monte Carlo stability across seeds (property)") {
    const TriMesh a = sphere(3);
    RngStream mesh_rng(2);
    const TriMesh b = make_synthetic(SyntheticShape::ellipsoid_shape(1.15, 0.9, 1.0), 3, mesh_rng);
    RngStream r1(100), r2(200);
    const auto e1 = surface_errors(a, b, 50000, r1);
    const auto e2 = surface_errors(a, b, 50000, r2);
    CHECK(std::abs(e1.assd - e2.assd) / e1.assd < 0.05);
    CHECK(e1.assd > 0.0);
    CHECK(std::isfinite(e1.hd90));
}

TEST_CASE("timing probe measures wall time") {
    const double idle = timing_probe("noop", []() {});
    CHECK(idle < 1.0);
    const double busy = timing_probe("sleep", []() {
        std::this_thread::sleep_for(std::chrono::milliseconds(15));
    });
    CHECK(busy >= 14.0);
}

TEST_CASE("repeat_timing reports mean and spread") {
    const TimingStats one = repeat_timing("single", []() {}, 1);
    CHECK(one.repeats == 1);
    CHECK(one.std_ms == 0.0);

    int counter = 0;
    const TimingStats many = repeat_timing("count", [&]() { ++counter; }, 50);
    CHECK(counter == 50);
    CHECK(many.repeats == 50);
    CHECK(many.mean_ms >= 0.0);
    CHECK(many.std_ms >= 0.0);
}
