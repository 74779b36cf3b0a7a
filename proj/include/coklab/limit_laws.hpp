#pragma once

#include "coklab/exact.hpp"
#include "coklab/signatures.hpp"

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace coklab {

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested tolerance cannot be certified by the computed tail bounds.
struct TruncationInsufficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The d-dimensional limit law with parameter q > 1 and scale chi > 0.
struct LimitLaw {
    long d = 1;
    Real q = 2;
    Real chi = 1;
};

// chi -> chi * q^{-steps}; consumers shift all signature arguments by
// steps * (1,...,1), i.e. pmf_shifted(x) = pmf_original(x + steps).
LimitLaw shift_law(const LimitLaw& law, long steps);

// E[q^{lambda . X}] = ((q-1) chi)^{|lambda|} / |lambda|! * (number of maximal
// subgroup chains of the group with type lambda'). Requires integer prime q.
Real moment_C(const LimitLaw& law, const Partition& lambda);

struct ValueWithTail {
    Real value = 0;
    Real tail_bound = 0;
};

// d=1 weight Pr(X = x) by the alternating series
//   (q^{-1};q^{-1})_inf^{-1} sum_{m>=0} e^{-chi q^{m-x}} (-1)^m
//       q^{-binom(m,2)} / (q^{-1};q^{-1})_m,
// truncated when the term envelope drops below tol. Computed internally in
// high precision: the terms are O(1) but cancel to O(q^{-x^2/2}).
ValueWithTail pmf_d1(long x, Real q, Real chi, Real tol = 1e-12L);
BigReal pmf_d1_big(long x, Real q, Real chi, Real tol = 1e-12L);

// Closed product form of the spectral observable: gated to exactly 0 unless
// mu <= beta in the dominance order, in which case every factor lies in (0,1].
Real h_hat(long d, Real q, const Signature& beta, const XSignature& mu, Real tol = kDefaultTol);

// Power-series expansion of the generating product behind h_hat. The product
// factors one variable at a time, so a coefficient is a product of
// per-variable coefficients: z_1 carries the truncated infinite factor
// (geometric/Euler expansion) and z_2..z_d carry exact small polynomials.
// Indexing: a(lambda) multiplies z_1^{lambda_1-lambda_2} ... z_d^{lambda_d}.
struct HSeries {
    long d = 1;
    Real q = 2;
    Signature beta;
    long lambda1_max = 0;
    std::vector<std::vector<BigReal>> factors;  // factors[i]: coeffs in z_{i+1}
    Real log2_E = 0;  // per-coefficient bound |a| <= 2^log2_E q^{-beta_1 e1 - binom(e1+1,2)}

    BigReal coeff(const Signature& lambda) const;
    BigReal eval(const XSignature& mu) const;  // at z_i = q^{mu_1 + ... + mu_i}
};

HSeries h_series(long d, Real q, const Signature& beta, long lambda1_max, Real tol = kDefaultTol);

// Moment oracle C_lambda plus the envelope data the truncation bounds need:
// log2_C_bound(t, cap) bounds log2 C_lambda over all lambda with lambda_1 = t
// and lambda_2..lambda_d <= cap; s_sup bounds |E[h_hat_beta]| over beta.
// log2_S_bound, when set, sharpens that to a per-beta bound on
// log2 |E[h_hat_beta]|; the inversion engine uses it to skip inner sums whose
// weighted contribution is certifiably below the tolerance.
struct MomentProvider {
    long d = 1;
    Real q = 2;
    std::function<BigReal(const Signature&)> C;
    std::function<Real(long, long)> log2_C_bound;
    std::function<Real(const Signature&)> log2_S_bound;
    Real s_sup = 1;
    Real total_mass = 1;  // C of the empty signature
};

MomentProvider make_moment_provider(const LimitLaw& law);
MomentProvider make_dirac_provider(long d, Real q, const XSignature& mu);

// Moment inversion: recovers weights M({nu}) and the dominance-order CDF
// M({mu <= nu}) from the provider's moments. Caches the inner spectral sums
// S_beta across calls, since neighbouring nu share most of their beta range.
class InversionEngine {
  public:
    InversionEngine(MomentProvider provider);

    ValueWithTail invert_weight(const Signature& nu, Real tol);
    ValueWithTail invert_cdf(const Signature& nu, Real tol);

    // Scales the series coefficient at lambda = (1,0,...,0) by (1+eps) in
    // every inner sum; used by the verify suite to prove the identity checks
    // are sensitive to the coefficients.
    void perturb_first_coefficient(Real eps) {
        if (eps != perturb_eps_) {
            perturb_eps_ = eps;
            s_cache_.clear();
        }
    }

  private:
    struct SEntry {
        Real value = 0;
        Real tail = 0;
    };

    void ensure_poch(long k);
    Real weight_coefficient(const Signature& nu, const Signature& beta, bool cdf) const;
    Real beta_tail_bound(const Signature& nu, long depth) const;
    SEntry spectral_sum(const Signature& beta, Real target);
    ValueWithTail invert_weight_impl(const Signature& nu, Real tol, bool cdf);

    MomentProvider provider_;
    Real perturb_eps_ = 0;
    Real log2q_ = 1;
    std::map<Signature, SEntry> s_cache_;
    std::vector<Real> poch_table_;  // (q^{-1};q^{-1})_k
    Real poch_inf_ = 1;
};

ValueWithTail invert_weight(const Signature& nu, const MomentProvider& provider, Real tol);
ValueWithTail invert_cdf(const Signature& nu, const MomentProvider& provider, Real tol);

struct QBinomialResiduals {
    Real weight_residual = 0;  // |sum - 1(n = m)|
    Real cdf_residual = 0;     // |sum - 1(m <= n)|
};

// Direct summation of the two telescoping b-sums over b in [m, n] (empty when
// n < m; m may be -inf, truncated under the Gaussian term envelope).
QBinomialResiduals check_qbinomial_identities(long n, XInt m, Real q, Real tol = 1e-12L);

}  // namespace coklab
