#ifndef RECUR_RNG_HPP
#define RECUR_RNG_HPP

#include <cmath>
#include <cstdint>

namespace recur {

// Deterministic generator with cheap, collision-resistant substreams.
// Parallel maps key a fresh stream off (seed, index) so results do not
// depend on worker count or scheduling.  Distributions are implemented
// here rather than taken from <random> so that identical seeds give
// identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { init(seed); }
    Rng(std::uint64_t seed, std::uint64_t stream) { init(mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1))); }

    Rng substream(std::uint64_t index) const {
        return Rng(state_origin_, index);
    }

    std::uint64_t next_u64() {
        // xorshift128+
        std::uint64_t x = s0_;
        const std::uint64_t y = s1_;
        s0_ = y;
        x ^= x << 23;
        s1_ = x ^ y ^ (x >> 17) ^ (y >> 26);
        return s1_ + y;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    double exponential() {
        double u;
        do { u = uniform01(); } while (u <= 0.0);
        return -std::log(u);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform01(); } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Marsaglia-Tsang; shape > 0, scale > 0.
    double gamma(double shape, double scale) {
        if (shape < 1.0) {
            double u;
            do { u = uniform01(); } while (u <= 0.0);
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

private:
    void init(std::uint64_t seed) {
        state_origin_ = seed;
        s0_ = mix(seed);
        s1_ = mix(s0_ ^ 0xda3e39cb94b95bdbULL);
        if (s0_ == 0 && s1_ == 0) s1_ = 1;
    }

    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_origin_ = 0;
    std::uint64_t s0_ = 0;
    std::uint64_t s1_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace recur

#endif
