#pragma once

#include <gmpxx.h>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace coklab {

using ExactInt = mpz_class;
using ExactRat = mpq_class;
using Real = long double;
using BigReal = boost::multiprecision::mpfr_float;

inline constexpr Real kDefaultTol = 1e-14L;
inline constexpr long kInfinity = -1;  // sentinel for an infinite q-Pochhammer

struct QPochSpec {
    Real a;
    Real qinv;   // must lie strictly in (0,1)
    long k;      // number of factors, or kInfinity
};

struct QPochResult {
    Real value;
    Real tail_bound;  // bound on the relative truncation error (0 for finite k)
};

// (a; qinv)_k = prod_{i=0}^{k-1} (1 - a qinv^i); k = kInfinity truncates when
// |a| qinv^i < tol (1 - qinv) so the dropped factors multiply to 1 + O(tol).
QPochResult qpoch(const QPochSpec& spec, Real tol = kDefaultTol);

// (q^{-e}; q^{-1})_k with the exponent kept symbolic so the zero factor
// (when e + i = 0 for some 0 <= i < k) is detected exactly, not by rounding.
// For k = kInfinity this is exactly 0 when e <= 0.
Real qpoch_expi(long e, Real qinv, long k, Real tol = kDefaultTol);

// Generic finite/infinite Pochhammer for any scalar type (used by the
// arbitrary-precision series code); tol is the relative truncation target.
template <typename T>
T qpoch_t(const T& a, const T& qinv, long k, const T& tol) {
    T prod(1), apow(a);
    if (k == kInfinity) {
        T cut = tol * (T(1) - qinv);
        for (int i = 0; i < 100000; ++i) {
            if (abs(apow) < cut) break;
            prod *= (T(1) - apow);
            apow *= qinv;
        }
        return prod;
    }
    for (long i = 0; i < k; ++i) {
        prod *= (T(1) - apow);
        apow *= qinv;
    }
    return prod;
}

// Gaussian binomial [n, k]_p.
Real gaussian_binomial(long n, long k, Real p);
ExactInt gaussian_binomial_exact(long n, long k, const ExactInt& p);

ExactInt ipow(const ExactInt& base, unsigned long e);
ExactInt factorial(unsigned long n);
ExactInt binomial_exact(unsigned long n, unsigned long k);

// binom(m, 2) = m(m-1)/2 as a plain integer exponent (m >= 0).
inline long binom2(long m) { return m * (m - 1) / 2; }

}  // namespace coklab
