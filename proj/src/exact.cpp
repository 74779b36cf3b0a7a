#include "coklab/exact.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace coklab {

QPochResult qpoch(const QPochSpec& spec, Real tol) {
    if (!(spec.qinv > 0.0L && spec.qinv < 1.0L))
        throw std::domain_error("qpoch: qinv must lie in (0,1)");
    if (spec.k != kInfinity && spec.k < 0)
        throw std::domain_error("qpoch: k must be nonnegative or kInfinity");
    if (tol <= 0.0L) throw std::domain_error("qpoch: tol must be positive");

    Real prod = 1.0L, apow = spec.a;
    if (spec.k == kInfinity) {
        const Real cut = tol * (1.0L - spec.qinv);
        long i = 0;
        while (std::fabs(apow) >= cut) {
            prod *= (1.0L - apow);
            apow *= spec.qinv;
            ++i;
            if (i > 1000000)
                throw std::runtime_error("qpoch: truncation did not converge");
        }
        // The dropped factors are prod_{j>i}(1 - a qinv^j); their log is
        // bounded by sum |a| qinv^j < |a| qinv^i/(1-qinv) < tol.
        return {prod, 2.0L * tol};
    }
    for (long i = 0; i < spec.k; ++i) {
        prod *= (1.0L - apow);
        apow *= spec.qinv;
    }
    return {prod, 0.0L};
}

Real qpoch_expi(long e, Real qinv, long k, Real tol) {
    if (k == kInfinity) {
        if (e <= 0) return 0.0L;  // the factor with i = -e vanishes
        return qpoch({std::pow(qinv, (Real)e), qinv, kInfinity}, tol).value;
    }
    if (e <= 0 && -e < k) return 0.0L;
    Real prod = 1.0L;
    for (long i = 0; i < k; ++i) prod *= (1.0L - std::pow(qinv, (Real)(e + i)));
    return prod;
}

ExactInt gaussian_binomial_exact(long n, long k, const ExactInt& p) {
    if (n < 0) throw std::domain_error("gaussian_binomial: n must be >= 0");
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    // Every prefix of the product is itself a Gaussian binomial, so the
    // divisions are exact and every intermediate stays an integer.
    ExactInt v = 1;
    for (long i = 1; i <= k; ++i) {
        v *= ipow(p, (unsigned long)(n - k + i)) - 1;
        v /= ipow(p, (unsigned long)i) - 1;
    }
    return v;
}

Real gaussian_binomial(long n, long k, Real p) {
    if (n < 0) throw std::domain_error("gaussian_binomial: n must be >= 0");
    if (k < 0 || k > n) return 0.0L;
    Real v = 1.0L;
    for (long i = 1; i <= k; ++i)
        v *= (std::pow(p, (Real)(n - i + 1)) - 1.0L) / (std::pow(p, (Real)i) - 1.0L);
    return v;
}

ExactInt ipow(const ExactInt& base, unsigned long e) {
    ExactInt r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

ExactInt factorial(unsigned long n) {
    ExactInt r;
    mpz_fac_ui(r.get_mpz_t(), n);
    return r;
}

ExactInt binomial_exact(unsigned long n, unsigned long k) {
    ExactInt r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

}  // namespace coklab
