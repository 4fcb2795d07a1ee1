#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <featq/core/error.hpp>

namespace featq {

namespace detail {

// splitmix64 step; used to spread seeds for derived streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic random stream over std::mt19937_64 with fixed, documented
/// derivation formulas. All distribution math is done here rather than with
/// <random> distribution classes, whose output is implementation-defined;
/// this keeps sequences reproducible across standard libraries.
///
/// Formulas:
///   uniform01: (engine() >> 11) * 2^-53, giving a double in [0, 1)
///   below(n):  floor(uniform01() * n)
///   normal:    Box-Muller, r = sqrt(-2 ln(1-u1)) * cos(2*pi*u2), no caching,
///              so each call consumes exactly two uniforms
///   bernoulli: uniform01() < p
///   derive:    new stream seeded splitmix64(seed ^ splitmix64(salt))
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_raw() { return engine_(); }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw InputError("Rng::below requires n > 0");
        auto k = static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
        return k < n ? k : n - 1; // guard against rounding at the top edge
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal draw. Consumes exactly two uniforms.
    double normal() {
        double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Independent substream for (this seed, salt). Pure function of the
    /// original seed, not of how many draws were consumed.
    Rng derive(std::uint64_t salt) const {
        return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(salt)));
    }

    /// Engine state as text, for checkpoints.
    std::string state() const {
        std::ostringstream os;
        os << seed_ << ' ' << engine_;
        return os.str();
    }

    static Rng restore(const std::string& text) {
        std::istringstream is(text);
        std::uint64_t seed = 0;
        if (!(is >> seed)) throw InputError("bad rng state string");
        Rng r(seed);
        if (!(is >> r.engine_)) throw InputError("bad rng state string");
        return r;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace featq
