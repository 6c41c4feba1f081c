#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace tensorcorr {

// splitmix64 step; used to derive independent seed streams (restart r, rank p, ...)
// so concurrent or reordered work still draws identical sequences.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic random source. Engine is std::mt19937_64 (bit-identical everywhere);
// the distribution transforms are implemented here rather than taken from <random>
// because libstdc++/libc++/MSVC disagree on normal/gamma draw sequences.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform on [0,1) with 53-bit resolution
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // uniform on (0,1], for logs
    double uniform_pos() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Box-Muller, one variate per call (two uniforms consumed, no cached state)
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Marsaglia-Tsang; shape < 1 handled via the G(a) = G(a+1) * U^(1/a) boost
    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
        if (shape < 1.0) {
            double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
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
            double u = uniform_pos();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        double s = x + y;
        if (s <= 0.0) return 0.5;  // astronomically rare underflow of both draws
        return x / s;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace tensorcorr
