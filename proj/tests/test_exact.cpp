#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coklab/exact.hpp"

using namespace coklab;

TEST_CASE("finite q-pochhammer telescopes one factor at a time") {
    for (Real qinv : {0.5L, 0.25L, 0.9L})
        for (Real a : {-2.0L, -0.3L, 0.4L, 0.99L})
            for (long k = 1; k <= 8; ++k) {
                Real full = qpoch({a, qinv, k}).value;
                Real step = qpoch({a, qinv, k - 1}).value * (1 - a * powl(qinv, (Real)(k - 1)));
                CHECK(full == doctest::Approx((double)step).epsilon(1e-14));
            }
}

TEST_CASE("infinite q-pochhammer is the limit of the finite ones") {
    QPochResult inf = qpoch({0.5L, 0.5L, kInfinity}, 1e-16L);
    Real finite = qpoch({0.5L, 0.5L, 60}).value;
    CHECK(fabsl(inf.value - finite) <= 1e-15L);
    CHECK(inf.tail_bound >= 0);
    CHECK(inf.tail_bound <= 1e-14L);
}

TEST_CASE("qpoch_expi detects the zero factor exactly") {
    CHECK(qpoch_expi(0, 0.5L, kInfinity) == 0);
    CHECK(qpoch_expi(-3, 0.5L, kInfinity) == 0);
    CHECK(qpoch_expi(1, 0.5L, kInfinity) > 0);
    CHECK(qpoch_expi(-2, 0.5L, 2) != 0);   // factors stop before the zero index
    CHECK(qpoch_expi(-2, 0.5L, 3) == 0);   // i = 2 hits e + i = 0
    CHECK(qpoch_expi(-2, 0.5L, 4) == 0);
}

TEST_CASE("gaussian binomial: exact and floating versions agree") {
    for (long n = 0; n <= 10; ++n)
        for (long k = 0; k <= n; ++k) {
            ExactInt e = gaussian_binomial_exact(n, k, 2);
            CHECK(gaussian_binomial(n, k, 2.0L) == doctest::Approx(e.get_d()).epsilon(1e-12));
        }
}

TEST_CASE("gaussian binomial: pinned values") {
    CHECK(gaussian_binomial_exact(4, 2, 2) == 35);
    CHECK(gaussian_binomial_exact(4, 2, 3) == 130);
    CHECK(gaussian_binomial_exact(9, 4, 2) == 3309747);
    CHECK(gaussian_binomial_exact(3, 5, 2) == 0);
    CHECK(gaussian_binomial_exact(5, 0, 7) == 1);
    CHECK_THROWS_AS(gaussian_binomial_exact(-1, 0, 2), std::domain_error);
}

TEST_CASE("gaussian binomial: q-pascal recursion") {
    for (long p : {2L, 3L, 5L})
        for (long n = 1; n <= 9; ++n)
            for (long k = 1; k <= n; ++k) {
                ExactInt lhs = gaussian_binomial_exact(n, k, p);
                ExactInt rhs = gaussian_binomial_exact(n - 1, k - 1, p) +
                               ipow(ExactInt(p), (unsigned long)k) *
                                   gaussian_binomial_exact(n - 1, k, p);
                CHECK(lhs == rhs);
            }
}

TEST_CASE("integer helpers") {
    CHECK(ipow(ExactInt(3), 0) == 1);
    CHECK(ipow(ExactInt(3), 7) == 2187);
    CHECK(factorial(0) == 1);
    CHECK(factorial(10) == 3628800);
    CHECK(binomial_exact(10, 4) == 210);
    CHECK(binomial_exact(4, 10) == 0);
    CHECK(binom2(0) == 0);
    CHECK(binom2(1) == 0);
    CHECK(binom2(5) == 10);
}
