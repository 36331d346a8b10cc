#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace roughreg {

// Seed = (master, stream). Distinct streams of one master seed are
// statistically independent, so Monte Carlo can hand stream s to path s and
// stay reproducible for any worker count.
struct Seed {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// xoshiro256++ seeded through splitmix64; Gaussians by Box-Muller with a
// cached spare so the draw count per normal is fixed (two uniforms per pair).
// Everything here is elementary arithmetic, so a (master, stream) pair
// reproduces the same sequence bit for bit on one platform.
class RandomStream {
  public:
    explicit RandomStream(Seed seed) {
        std::uint64_t sm = seed.master ^ (0x9e3779b97f4a7c15ULL * (seed.stream + 0x632be59bd9b4e019ULL));
        for (auto& w : state_) w = detail::splitmix64(sm);
        bool all_zero = true;
        for (auto w : state_) all_zero = all_zero && w == 0;
        if (all_zero) state_[0] = 1;  // xoshiro must not start at the all-zero state
    }

    std::uint64_t next_u64() {
        auto& s = state_;
        std::uint64_t result = detail::rotl(s[0] + s[3], 23) + s[0];
        std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = detail::rotl(s[3], 45);
        return result;
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1] keeps the log finite.
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace roughreg
