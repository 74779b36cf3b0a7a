#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coklab/limit_laws.hpp"

#include <cmath>

using namespace coklab;

namespace {

constexpr Real kRefTol = 1e-14L;

bool close(Real a, Real b, Real tol) { return fabsl(a - b) <= tol; }

}  // namespace

TEST_CASE("d=1 weights match frozen references at q=2, chi=1") {
    struct Ref {
        long x;
        Real value;
    };
    const Ref refs[] = {
        {-2, 0.061099692058055842L}, {-1, 0.3433356422214654L},   {0, 0.42073042153167206L},
        {1, 0.15325588276563087L},   {2, 0.019454769053803563L},  {3, 0.00094367185101959137L},
    };
    for (const Ref& r : refs) {
        ValueWithTail w = pmf_d1(r.x, 2, 1);
        CHECK(close(w.value, r.value, 1e-13L));
        CHECK(w.tail_bound <= 1e-12L);
    }
}

TEST_CASE("d=1 weights are a probability distribution") {
    for (Real chi : {0.5L, 1.0L, 2.0L}) {
        Real total = 0;
        for (long x = -30; x <= 40; ++x) total += pmf_d1(x, 2, chi).value;
        CHECK(close(total, 1, 1e-10L));
    }
    Real total3 = 0;
    for (long x = -20; x <= 30; ++x) total3 += pmf_d1(x, 3, 1).value;
    CHECK(close(total3, 1, 1e-10L));
}

TEST_CASE("weights decay superexponentially in both tails") {
    Real prev = pmf_d1(3, 2, 1).value;
    for (long x = 4; x <= 8; ++x) {
        Real cur = pmf_d1(x, 2, 1).value;
        CHECK(cur < prev / 4);
        prev = cur;
    }
    prev = pmf_d1(-2, 2, 1).value;
    for (long x = -3; x >= -6; --x) {
        Real cur = pmf_d1(x, 2, 1).value;
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("moments of the d=1 law match the closed product") {
    for (long p : {2L, 3L}) {
        for (Real chi : {0.5L, 1.0L}) {
            for (long m = 1; m <= 3; ++m) {
                BigReal sum = 0;
                for (long x = -15; x <= 2 * m + 40; ++x) {
                    // q^{mx} amplifies absolute error, so shrink tol with x.
                    Real tol_x = 1e-12L * powl(static_cast<Real>(p),
                                               static_cast<Real>(-m * std::max(x, 0L) - 10));
                    BigReal qm = pow(BigReal(p), m * x);
                    sum += qm * pmf_d1_big(x, static_cast<Real>(p), chi, tol_x);
                }
                Real closed = 1;
                for (long i = 1; i <= m; ++i)
                    closed *= chi * (powl(static_cast<Real>(p), i) - 1) / i;
                Real got = static_cast<Real>(sum);
                CHECK(close(got / closed, 1, 1e-8L));
            }
        }
    }
}

TEST_CASE("halving chi translates the law by one step") {
    ValueWithTail lhs = pmf_d1(3, 2, 0.5L);
    ValueWithTail rhs = pmf_d1(4, 2, 1);
    CHECK(close(lhs.value, rhs.value, 1e-14L));
    CHECK(close(lhs.value, 1.8534332380072951928e-05L, 1e-18L));
    for (long x = -3; x <= 5; ++x)
        CHECK(close(pmf_d1(x, 3, 1.0L / 3).value, pmf_d1(x + 1, 3, 1).value, 1e-12L));
}

TEST_CASE("shift_law rescales chi by q^-steps") {
    LimitLaw law{1, 2, 1};
    LimitLaw shifted = shift_law(law, 2);
    CHECK(shifted.chi == doctest::Approx(0.25));
    CHECK(shift_law(law, -1).chi == doctest::Approx(2));
    CHECK(close(pmf_d1(0, 2, shifted.chi).value, pmf_d1(2, 2, 1).value, 1e-13L));
}

TEST_CASE("moment_C pins for small shapes") {
    LimitLaw law{1, 2, 1};
    CHECK(moment_C(law, {}) == doctest::Approx(1));
    CHECK(moment_C(law, {1}) == doctest::Approx(1));
    CHECK(moment_C(law, {2}) == doctest::Approx(1.5));
    CHECK(moment_C(law, {3}) == doctest::Approx(3.5));
    LimitLaw law2{2, 2, 1};
    CHECK(moment_C(law2, {1, 1}) == doctest::Approx(0.5));
    CHECK(moment_C(law2, {2, 1}) == doctest::Approx(0.8333333333333333).epsilon(1e-12));
    LimitLaw law3{1, 3, 0.5L};
    CHECK(moment_C(law3, {1}) == doctest::Approx(1));
    CHECK(moment_C(law3, {2}) == doctest::Approx(2));
}

TEST_CASE("moment_C rejects non-integer and non-prime q") {
    CHECK_THROWS_AS(moment_C({1, 1.5L, 1}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(moment_C({1, 4, 1}, {1}), std::invalid_argument);
}

TEST_CASE("h_hat lies in [0,1] and vanishes exactly off the dominance cone") {
    for (Real q : {1.5L, 2.0L}) {
        for (long b1 = -2; b1 <= 2; ++b1)
            for (long b2 = -2; b2 <= b1; ++b2) {
                Signature beta{b1, b2};
                for (long m1 = -2; m1 <= 2; ++m1)
                    for (long m2 = -2; m2 <= m1; ++m2) {
                        XSignature mu{m1, m2};
                        Real v = h_hat(2, q, beta, mu);
                        CHECK(v >= 0);
                        CHECK(v <= 1);
                        bool dominated = dominance_leq(mu, XSignature{b1, b2});
                        if (dominated)
                            CHECK(v > 0);
                        else
                            CHECK(v == 0);
                    }
            }
    }
}

TEST_CASE("h_hat handles -inf coordinates") {
    Signature beta{1, 0};
    CHECK(h_hat(2, 2, beta, {XInt(0), XInt::neg_inf()}) > 0);
    CHECK(h_hat(2, 2, beta, {XInt(2), XInt::neg_inf()}) == 0);
    CHECK(h_hat(1, 2, {0}, {XInt::neg_inf()}) > 0);
}

TEST_CASE("series evaluation reproduces the closed product") {
    for (const Signature& beta : {Signature{1, 0}, Signature{0, -1}, Signature{2, -1}}) {
        HSeries series = h_series(2, 2, beta, 24);
        for (long m1 = -2; m1 <= 2; ++m1)
            for (long m2 = -2; m2 <= m1; ++m2) {
                XSignature mu{m1, m2};
                Real direct = h_hat(2, 2, beta, mu);
                Real viaSeries = static_cast<Real>(series.eval(mu));
                CHECK(close(direct, viaSeries, 1e-8L));
            }
    }
}

TEST_CASE("series coefficients respect the stated envelope") {
    HSeries series = h_series(2, 2, {1, 0}, 16);
    for (long e1 = 0; e1 <= 16; ++e1)
        for (long e2 = 0; e2 <= static_cast<long>(series.factors[1].size()) - 1; ++e2) {
            Signature lam{e1 + e2, e2};
            BigReal a = series.coeff(lam);
            Real bound = series.log2_E - (series.beta[0] * e1 + binom2(e1 + 1)) * log2l(2.0L);
            CHECK(static_cast<Real>(log2(abs(a) + BigReal(1e-300))) <= bound + 1e-6L);
        }
}

TEST_CASE("dirac moments invert to a point mass, d=1") {
    for (long m : {-2L, 0L, 1L}) {
        MomentProvider dirac = make_dirac_provider(1, 2, {m});
        for (long nu = -3; nu <= 3; ++nu) {
            ValueWithTail w = invert_weight({nu}, dirac, 1e-8L);
            Real want = (nu == m) ? 1 : 0;
            CHECK(close(w.value, want, 1e-6L));
            ValueWithTail c = invert_cdf({nu}, dirac, 1e-8L);
            Real wantc = (m <= nu) ? 1 : 0;
            CHECK(close(c.value, wantc, 1e-6L));
        }
    }
}

TEST_CASE("dirac moments invert to a point mass, d=2") {
    XSignature mu{0, -1};
    MomentProvider dirac = make_dirac_provider(2, 2, mu);
    InversionEngine engine(dirac);
    for (long n1 = -2; n1 <= 2; ++n1)
        for (long n2 = -2; n2 <= n1; ++n2) {
            Signature nu{n1, n2};
            Real want = (n1 == 0 && n2 == -1) ? 1 : 0;
            CHECK(close(engine.invert_weight(nu, 1e-8L).value, want, 1e-6L));
        }
}

TEST_CASE("d=1 inversion of the limit moments recovers the weights") {
    MomentProvider provider = make_moment_provider({1, 2, 1});
    InversionEngine engine(provider);
    for (long x = -4; x <= 6; ++x) {
        Real direct = pmf_d1(x, 2, 1).value;
        ValueWithTail inverted = engine.invert_weight({x}, 1e-9L);
        CHECK(close(inverted.value, direct, 1e-6L));
    }
}

TEST_CASE("d=1 cdf matches the summed weights") {
    MomentProvider provider = make_moment_provider({1, 2, 1});
    InversionEngine engine(provider);
    for (long x : {-2L, 0L, 2L}) {
        Real summed = 0;
        for (long y = -25; y <= x; ++y) summed += pmf_d1(y, 2, 1).value;
        CHECK(close(engine.invert_cdf({x}, 1e-9L).value, summed, 1e-6L));
    }
}

TEST_CASE("perturbing a series coefficient breaks the dirac identity") {
    MomentProvider dirac = make_dirac_provider(1, 2, {0});
    InversionEngine engine(dirac);
    Real clean = engine.invert_weight({0}, 1e-9L).value;
    CHECK(close(clean, 1, 1e-6L));
    engine.perturb_first_coefficient(1e-3L);
    Real skewed = engine.invert_weight({0}, 1e-9L).value;
    CHECK(fabsl(skewed - 1) > 1e-6L);
    engine.perturb_first_coefficient(0);
    CHECK(close(engine.invert_weight({0}, 1e-9L).value, 1, 1e-6L));
}

TEST_CASE("q-binomial identities hold on a small grid") {
    for (Real q : {1.5L, 2.0L}) {
        for (long n = -3; n <= 3; ++n) {
            for (long m = -3; m <= 3; ++m) {
                QBinomialResiduals r = check_qbinomial_identities(n, XInt(m), q);
                CHECK(r.weight_residual <= 1e-9L);
                CHECK(r.cdf_residual <= 1e-9L);
            }
            QBinomialResiduals r = check_qbinomial_identities(n, XInt::neg_inf(), q);
            CHECK(r.weight_residual <= 1e-9L);
            CHECK(r.cdf_residual <= 1e-9L);
        }
    }
}

TEST_CASE("unreachable tolerances raise instead of returning junk") {
    CHECK_THROWS_AS(pmf_d1(3000, 2, 1), TruncationInsufficient);
    MomentProvider provider = make_moment_provider({1, 2, 1});
    InversionEngine engine(provider);
    CHECK_THROWS_AS(engine.invert_weight({0}, 1e-4000L), TruncationInsufficient);
}

TEST_CASE("invert_weight tail bounds cover the actual error") {
    MomentProvider provider = make_moment_provider({1, 2, 1});
    InversionEngine engine(provider);
    for (long x = -2; x <= 3; ++x) {
        ValueWithTail w = engine.invert_weight({x}, 1e-8L);
        CHECK(w.tail_bound <= 1e-8L);
        CHECK(fabsl(w.value - pmf_d1(x, 2, 1).value) <= w.tail_bound + 1e-12L);
    }
}
