#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace garpp {

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the substream identified by (a, b) under a master seed.
/// Every consumer (simulation step x worker, trial index, bench cell)
/// derives its own stream this way, so any prefix of the work is
/// reproducible independently of how much else runs.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    return h;
}

/// Deterministic random stream: mt19937_64 plus explicit Box-Muller, so a
/// given seed yields the same doubles on every platform (std::normal_distribution
/// is implementation-defined; we avoid it).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in the open interval (0, 1).
    double uniform_open01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform index in [0, n). n must be > 0. Modulo bias is negligible
    /// for the small n used here and keeps the stream consumption fixed.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace garpp
