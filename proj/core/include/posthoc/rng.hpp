#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace posthoc {

/// Counter-based pseudo-random stream. The i-th output is a pure function of
/// (key, i), so streams are reproducible independent of thread scheduling,
/// and child streams can be split off deterministically for (run, purpose)
/// pairs without coordination.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    /// Builds the key by folding `seed` and each path element through the
    /// mixer. Typical use: Rng::from_path(master_seed, {run_id, tag}).
    static Rng from_path(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
        std::uint64_t k = mix(seed + kGamma);
        for (std::uint64_t p : path) k = mix(k ^ mix(p + kGamma));
        return Rng(k);
    }

    /// Child stream for a named purpose; the tag string is hashed (FNV-1a).
    Rng derive(std::string_view purpose) const {
        std::uint64_t h = 1469598103934665603ull;
        for (char ch : purpose) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ull;
        }
        return derive_tag(h);
    }

    Rng derive_tag(std::uint64_t tag) const {
        return Rng(mix(key_ ^ mix(tag + kGamma)));
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

    /// Uniform in [0, 1), 53 bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Standard normal via Box-Muller (platform-independent, unlike
    /// std::normal_distribution).
    double next_gauss();

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t next_below(std::uint64_t n);

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline double Rng::next_gauss() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
}

inline std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

}  // namespace posthoc
