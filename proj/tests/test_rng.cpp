#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <featq/core/rng.hpp>

using namespace featq;

TEST_CASE("uniform01 stays in [0,1) and reproduces from the seed") {
    Rng a(42), b(42);
    for (int i = 0; i < 10000; ++i) {
        const double u = a.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(u == b.uniform01());
    }
}

TEST_CASE("uniform01 matches the documented engine formula") {
    std::mt19937_64 engine(123);
    Rng r(123);
    for (int i = 0; i < 100; ++i) {
        const double expected =
            static_cast<double>(engine() >> 11) * 0x1.0p-53;
        REQUIRE(r.uniform01() == expected);
    }
}

TEST_CASE("below covers its range uniformly") {
    Rng r(7);
    const std::uint64_t n = 8;
    std::vector<int> counts(n, 0);
    const int draws = 80000;
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t k = r.below(n);
        REQUIRE(k < n);
        ++counts[static_cast<std::size_t>(k)];
    }
    // chi-square against uniform; 7 dof, 24.32 is the 0.001 critical value
    const double expected = static_cast<double>(draws) / static_cast<double>(n);
    double chi2 = 0;
    for (int c : counts) {
        const double d = c - expected;
        chi2 += d * d / expected;
    }
    REQUIRE(chi2 < 24.32);
    REQUIRE_THROWS_AS(r.below(0), InputError);
}

TEST_CASE("normal has roughly standard moments") {
    Rng r(11);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        REQUIRE(std::isfinite(x));
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.02);
    REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("normal consumes exactly two uniforms") {
    Rng a(5), b(5);
    a.normal();
    b.uniform01();
    b.uniform01();
    REQUIRE(a.uniform01() == b.uniform01());
}

TEST_CASE("bernoulli respects edge probabilities and frequency") {
    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE_FALSE(r.bernoulli(0.0));
        REQUIRE(r.bernoulli(1.0));
    }
    int hits = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        if (r.bernoulli(0.3)) ++hits;
    REQUIRE(std::abs(hits / static_cast<double>(n) - 0.3) < 0.01);
}

TEST_CASE("derive is a pure function of seed and salt") {
    Rng parent(77);
    Rng d1 = parent.derive(0xE1);
    parent.uniform01();
    parent.normal();
    Rng d2 = parent.derive(0xE1);
    for (int i = 0; i < 100; ++i) REQUIRE(d1.uniform01() == d2.uniform01());

    Rng other = parent.derive(0xD2);
    Rng base = Rng(77).derive(0xE1);
    bool all_equal = true;
    Rng check = Rng(77).derive(0xD2);
    for (int i = 0; i < 100; ++i)
        if (check.uniform01() != base.uniform01()) all_equal = false;
    REQUIRE_FALSE(all_equal);
    (void)other;
}

TEST_CASE("state round-trips mid-stream") {
    Rng r(31337);
    for (int i = 0; i < 1234; ++i) r.uniform01();
    const std::string s = r.state();
    Rng restored = Rng::restore(s);
    for (int i = 0; i < 1000; ++i)
        REQUIRE(r.uniform01() == restored.uniform01());
    REQUIRE_THROWS_AS(Rng::restore("not a state"), InputError);
}
