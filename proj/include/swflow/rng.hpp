// Counter-based random stream. Each draw is a pure function of (seed, counter),
// so sequences are identical across platforms and streams can be forked without
// sharing state.
#pragma once

#include <cstdint>

#include "swflow/vec3.hpp"

namespace swflow {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}
}  // namespace detail

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return counter_; }

    std::uint64_t next_u64() {
        return detail::mix64(seed_ + (++counter_) * 0x9E3779B97F4A7C15ull);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the second sample of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    Vec3 normal3() {
        const double a = normal(), b = normal(), c = normal();
        return {a, b, c};
    }

    // Uniform direction on the unit sphere.
    Vec3 unit_vector() {
        for (;;) {
            const Vec3 v = normal3();
            const double n = norm(v);
            if (n > 1e-12) return v / n;
        }
    }

    // Independent child stream; deterministic in (seed, salt).
    RngStream derive(std::uint64_t salt) const {
        return RngStream(detail::mix64(seed_ ^ (0x632BE59BD9B4E019ull + salt * 0xD6E8FEB86659FD93ull)));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace swflow
