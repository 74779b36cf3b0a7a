#include "coklab/limit_laws.hpp"

#include "coklab/pgroups.hpp"

#include <mpfr.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <utility>

namespace coklab {

namespace {

constexpr Real kLog2Floor = -1e30L;
constexpr Real kLog2E = 1.442695040888963407L;

unsigned digits10_from_bits(long bits) {
    return static_cast<unsigned>(bits * 0.30103) + 4;
}

// Scoped default-precision switch for BigReal temporaries.
class PrecisionGuard {
  public:
    explicit PrecisionGuard(long bits) : saved_(BigReal::default_precision()) {
        BigReal::default_precision(digits10_from_bits(bits));
    }
    ~PrecisionGuard() { BigReal::default_precision(saved_); }
    PrecisionGuard(const PrecisionGuard&) = delete;
    PrecisionGuard& operator=(const PrecisionGuard&) = delete;

  private:
    unsigned saved_;
};

Real log2_factorial(long n) {
    return lgammal(static_cast<Real>(n) + 1) / logl(2.0L);
}

BigReal to_bigreal(const ExactInt& z) {
    BigReal out;
    mpfr_set_z(out.backend().data(), z.get_mpz_t(), MPFR_RNDN);
    return out;
}

BigReal bpow(const BigReal& base, long e) {
    return boost::multiprecision::pow(base, e);
}

Real phi_value(Real q) {
    return qpoch_expi(1, 1 / q, kInfinity);
}

long require_prime_q(Real q, const char* who) {
    long qi = static_cast<long>(llroundl(q));
    bool prime = static_cast<Real>(qi) == q && qi >= 2;
    for (long f = 2; prime && f * f <= qi; ++f)
        if (qi % f == 0) prime = false;
    if (!prime) throw std::invalid_argument(std::string(who) + ": q must be an integer prime");
    return qi;
}

Partition partition_from_lambda(const Signature& lambda, long d) {
    if (static_cast<long>(lambda.size()) > d || !is_signature(lambda))
        throw std::invalid_argument("moment index must be a signature with at most d parts");
    if (!lambda.empty() && lambda.back() < 0)
        throw std::invalid_argument("moment index must be nonnegative");
    return normalize_partition(lambda);
}

// Coefficient polynomials of the finite factors in z_2..z_d:
// P_i(z) = prod_{j=lo_i}^{hi_i} (1 - q^{-j} z) with lo_i = beta_1+...+beta_i+1
// and hi_i = beta_1+...+beta_{i-2} + 2 beta_{i-1}, so deg P_i = beta_{i-1}-beta_i.
std::vector<std::vector<BigReal>> finite_factor_polys(long d, Real q, const Signature& beta) {
    std::vector<std::vector<BigReal>> polys;
    const BigReal qb(q);
    std::vector<long> B(d + 1, 0);
    for (long t = 1; t <= d; ++t) B[t] = B[t - 1] + beta[t - 1];
    for (long i = 2; i <= d; ++i) {
        std::vector<BigReal> poly{BigReal(1)};
        for (long j = B[i] + 1; j <= B[i - 2] + 2 * beta[i - 2]; ++j) {
            BigReal a = bpow(qb, -j);
            poly.emplace_back(0);
            for (long k = static_cast<long>(poly.size()) - 1; k >= 1; --k)
                poly[k] -= a * poly[k - 1];
        }
        polys.push_back(std::move(poly));
    }
    return polys;
}

}  // namespace

LimitLaw shift_law(const LimitLaw& law, long steps) {
    LimitLaw out = law;
    out.chi = law.chi * powl(law.q, static_cast<Real>(-steps));
    if (!(out.chi > 0) || !std::isfinite(static_cast<double>(out.chi)))
        throw std::invalid_argument("shift_law: shifted chi left the representable range");
    return out;
}

Real moment_C(const LimitLaw& law, const Partition& lambda) {
    if (law.d < 1) throw std::invalid_argument("moment_C: d must be at least 1");
    long qi = require_prime_q(law.q, "moment_C");
    if (!(law.chi > 0)) throw std::invalid_argument("moment_C: chi must be positive");
    Partition lam = partition_from_lambda(lambda, law.d);
    long w = weight(lam);
    PrecisionGuard guard(256);
    ExactInt chains = max_chain_count({qi, conjugate(lam)});
    BigReal val = bpow(BigReal((law.q - 1) * law.chi), w) * to_bigreal(chains) /
                  to_bigreal(factorial(static_cast<unsigned long>(w)));
    return val.convert_to<Real>();
}

namespace {

BigReal pmf_d1_impl(long x, Real q, Real chi, Real tol, Real* tail_out) {
    if (!(q > 1)) throw std::invalid_argument("pmf_d1: q must exceed 1");
    if (!(chi > 0) || !std::isfinite(static_cast<double>(chi)))
        throw std::invalid_argument("pmf_d1: chi must be positive and finite");
    if (!(tol > 0)) throw std::invalid_argument("pmf_d1: tol must be positive");
    const Real log2q = log2l(q);
    long cancel_bits = x > 0 ? static_cast<long>(ceill(log2q * binom2(x + 1))) : 0;
    if (cancel_bits > (1L << 22))
        throw TruncationInsufficient("pmf_d1: x too large for the requested tolerance");
    long prec = 128 + cancel_bits + static_cast<long>(ceill(std::max<Real>(0, -log2l(tol))));
    PrecisionGuard guard(prec);

    const BigReal qb(q), chib(chi);
    const BigReal qinv = 1 / qb;
    const Real log2phi = log2l(phi_value(q));
    BigReal sum = 0;
    BigReal gauss = 1;             // q^{-binom(m,2)}
    BigReal poch = 1;              // (q^{-1};q^{-1})_m
    BigReal qpow = bpow(qb, -x);   // q^{m-x}
    long m = 0;
    Real l2env = 0;
    while (true) {
        BigReal term = exp(-chib * qpow) * gauss / poch;
        if (m & 1)
            sum -= term;
        else
            sum += term;
        ++m;
        if (m > 200000) throw NonConvergence("pmf_d1: series did not settle within 200000 terms");
        gauss *= bpow(qinv, m - 1);
        poch *= 1 - bpow(qinv, m);
        qpow *= qb;
        l2env = -log2q * binom2(m) - log2phi;
        if (l2env < log2l(tol) + log2phi - 7) break;
    }
    BigReal phi_big = qpoch_t<BigReal>(qinv, qinv, kInfinity, bpow(BigReal(0.5), prec));
    sum /= phi_big;
    if (tail_out) *tail_out = exp2l(l2env + 1 - log2phi);
    return sum;
}

}  // namespace

ValueWithTail pmf_d1(long x, Real q, Real chi, Real tol) {
    Real tail = 0;
    BigReal v = pmf_d1_impl(x, q, chi, tol, &tail);
    return {v.convert_to<Real>(), tail};
}

BigReal pmf_d1_big(long x, Real q, Real chi, Real tol) {
    return pmf_d1_impl(x, q, chi, tol, nullptr);
}

Real h_hat(long d, Real q, const Signature& beta, const XSignature& mu, Real tol) {
    if (d < 1) throw std::invalid_argument("h_hat: d must be at least 1");
    if (!(q > 1)) throw std::invalid_argument("h_hat: q must exceed 1");
    if (static_cast<long>(beta.size()) != d || !is_signature(beta))
        throw std::invalid_argument("h_hat: beta must be a length-d signature");
    if (static_cast<long>(mu.size()) != d || !is_xsignature(mu))
        throw std::invalid_argument("h_hat: mu must be a length-d extended signature");
    if (!dominance_leq(mu, to_xsignature(beta))) return 0;
    const Real qinv = 1 / q;
    Real out = 1;
    long s = 0;
    bool inf_suffix = false;
    for (long i = 1; i <= d; ++i) {
        if (mu[i - 1].is_neg_inf()) inf_suffix = true;
        if (!inf_suffix) s += beta[i - 1] - mu[i - 1].v;
        // prefix sums hitting -inf turn every later factor into (0; q^{-1})_k = 1
        if (inf_suffix) continue;
        long k = i == 1 ? kInfinity : beta[i - 2] - beta[i - 1];
        out *= qpoch_expi(s + 1, qinv, k, tol);
    }
    return out;
}

HSeries h_series(long d, Real q, const Signature& beta, long lambda1_max, Real tol) {
    (void)tol;
    if (d < 1) throw std::invalid_argument("h_series: d must be at least 1");
    if (!(q > 1)) throw std::invalid_argument("h_series: q must exceed 1");
    if (static_cast<long>(beta.size()) != d || !is_signature(beta))
        throw std::invalid_argument("h_series: beta must be a length-d signature");
    if (lambda1_max < 0) throw std::invalid_argument("h_series: lambda1_max must be nonnegative");

    HSeries hs;
    hs.d = d;
    hs.q = q;
    hs.beta = beta;
    hs.lambda1_max = lambda1_max;

    const BigReal qb(q);
    std::vector<BigReal> c1(lambda1_max + 1);
    c1[0] = 1;
    for (long m = 1; m <= lambda1_max; ++m)
        c1[m] = c1[m - 1] * -bpow(qb, -(beta[0] + m)) / (1 - bpow(qb, -m));
    hs.factors.push_back(std::move(c1));
    for (auto& poly : finite_factor_polys(d, q, beta)) hs.factors.push_back(std::move(poly));

    Real log2e = -log2l(phi_value(q));
    for (size_t i = 1; i < hs.factors.size(); ++i) {
        BigReal mx = 0;
        for (const auto& c : hs.factors[i]) mx = std::max(mx, BigReal(abs(c)));
        log2e += log2(mx).convert_to<Real>();
    }
    hs.log2_E = log2e;
    return hs;
}

BigReal HSeries::coeff(const Signature& lambda) const {
    if (static_cast<long>(lambda.size()) != d || !is_signature(lambda) || lambda.back() < 0)
        throw std::invalid_argument("HSeries::coeff: lambda must be a nonnegative length-d signature");
    long e1 = d > 1 ? lambda[0] - lambda[1] : lambda[0];
    if (e1 > lambda1_max)
        throw std::out_of_range("HSeries::coeff: lambda_1 - lambda_2 exceeds the truncation order");
    BigReal out = factors[0][e1];
    for (long i = 2; i <= d; ++i) {
        long ei = i < d ? lambda[i - 1] - lambda[i] : lambda[d - 1];
        const auto& poly = factors[i - 1];
        if (ei >= static_cast<long>(poly.size())) return BigReal(0);
        out *= poly[ei];
    }
    return out;
}

BigReal HSeries::eval(const XSignature& mu) const {
    if (static_cast<long>(mu.size()) != d || !is_xsignature(mu))
        throw std::invalid_argument("HSeries::eval: mu must be a length-d extended signature");
    const BigReal qb(q);
    std::vector<BigReal> z(d);
    long s = 0;
    bool inf_suffix = false;
    for (long i = 0; i < d; ++i) {
        if (mu[i].is_neg_inf()) inf_suffix = true;
        if (inf_suffix) {
            z[i] = 0;
        } else {
            s += mu[i].v;
            z[i] = bpow(qb, s);
        }
    }
    BigReal total = 0;
    std::function<void(long, const BigReal&)> rec = [&](long i, const BigReal& acc) {
        if (i == d) {
            total += acc;
            return;
        }
        const auto& f = factors[i];
        BigReal zp = 1;
        for (long ei = 0; ei < static_cast<long>(f.size()); ++ei) {
            if (ei > 0) zp *= z[i];
            rec(i + 1, acc * f[ei] * zp);
        }
    };
    rec(0, BigReal(1));
    return total;
}

namespace {

constexpr long kSmallMomentCache = 512;

struct MomentState {
    long d = 1;
    long qi = 2;
    Real q = 2;
    Real chi = 1;
    Real log2q = 1;
    Real log2K = 0;
    unsigned prec = 0;
    // d = 1: C_m advances by one multiplication, so keep a small random-access
    // cache plus a rolling frontier for the deep sequential sweeps.
    std::vector<BigReal> small;
    long frontier_m = 0;
    BigReal frontier_c = 1;
    BigReal frontier_qpow = 1;  // q^frontier_m, advanced by one multiplication
    // d >= 2: maximal-chain DP keyed by the moment index, plus assembled C.
    std::map<Partition, BigReal> nmax;
    std::map<Partition, BigReal> cmemo;
    std::vector<BigReal> fact;
};

void ensure_precision(MomentState& st) {
    unsigned cur = BigReal::default_precision();
    if (st.prec >= cur) return;
    st.small.clear();
    st.frontier_m = 0;
    st.frontier_c = 1;
    st.frontier_qpow = 1;
    st.nmax.clear();
    st.cmemo.clear();
    st.fact.clear();
    st.prec = cur;
}

BigReal moment_d1(MomentState& st, long m) {
    const BigReal qb(st.q), chib(st.chi);
    if (st.small.empty()) st.small.emplace_back(1);
    if (static_cast<long>(st.small.size()) <= std::min(m, kSmallMomentCache)) {
        BigReal qpow = bpow(qb, static_cast<long>(st.small.size()) - 1);
        while (static_cast<long>(st.small.size()) <= std::min(m, kSmallMomentCache)) {
            long t = static_cast<long>(st.small.size());
            qpow *= qb;
            st.small.push_back(st.small.back() * chib * (qpow - 1) / t);
        }
    }
    if (m < static_cast<long>(st.small.size())) return st.small[m];
    if (st.frontier_m > m || st.frontier_m < kSmallMomentCache) {
        st.frontier_m = kSmallMomentCache;
        st.frontier_c = st.small[kSmallMomentCache];
        st.frontier_qpow = bpow(qb, kSmallMomentCache);
    }
    while (st.frontier_m < m) {
        ++st.frontier_m;
        st.frontier_qpow *= qb;
        st.frontier_c *= chib * (st.frontier_qpow - 1) / st.frontier_m;
    }
    return st.frontier_c;
}

const BigReal& fact_big(MomentState& st, long n) {
    if (st.fact.empty()) st.fact.emplace_back(1);
    while (static_cast<long>(st.fact.size()) <= n) {
        long t = static_cast<long>(st.fact.size());
        st.fact.push_back(st.fact.back() * t);
    }
    return st.fact[n];
}

// Subgroup count for the conjugate pair (one-box covers), evaluated without
// materialising the conjugates: lam_1 can reach the thousands here and the
// conjugate partitions would have that many parts.
ExactInt cover_edge_count(const Partition& pred, const Partition& cur, long p) {
    ExactInt pz(p), total(1);
    auto at = [](const Partition& v, long i) {
        return i <= static_cast<long>(v.size()) ? v[i - 1] : 0L;
    };
    for (long i = 1; i <= static_cast<long>(cur.size()); ++i) {
        long lci = at(cur, i);
        long mci = at(pred, i);
        long mci1 = at(pred, i + 1);
        total *= ipow(pz, static_cast<unsigned long>(mci1 * (lci - mci)));
        total *= gaussian_binomial_exact(lci - mci1, mci - mci1, pz);
    }
    return total;
}

// Maximal-chain count of the group whose type is conjugate(lam), as a float:
// the exact integers reach q^{binom(lambda_1,2)} and would be megabytes each.
const BigReal& nmax_big(MomentState& st, const Partition& lam) {
    auto hit = st.nmax.find(lam);
    if (hit != st.nmax.end()) return hit->second;
    std::vector<Partition> stack{lam};
    while (!stack.empty()) {
        Partition cur = stack.back();
        if (st.nmax.count(cur)) {
            stack.pop_back();
            continue;
        }
        if (cur.empty()) {
            st.nmax.emplace(std::move(cur), BigReal(1));
            stack.pop_back();
            continue;
        }
        bool ready = true;
        BigReal total = 0;
        for (size_t i = 0; i < cur.size(); ++i) {
            if (i + 1 < cur.size() && cur[i] == cur[i + 1]) continue;
            Partition pred = cur;
            pred[i] -= 1;
            pred = normalize_partition(std::move(pred));
            auto pit = st.nmax.find(pred);
            if (pit == st.nmax.end()) {
                stack.push_back(std::move(pred));
                ready = false;
                continue;
            }
            if (ready) total += to_bigreal(cover_edge_count(pred, cur, st.qi)) * pit->second;
        }
        if (ready) {
            st.nmax.emplace(std::move(cur), std::move(total));
            stack.pop_back();
        }
    }
    return st.nmax.at(lam);
}

}  // namespace

MomentProvider make_moment_provider(const LimitLaw& law) {
    if (law.d < 1) throw std::invalid_argument("make_moment_provider: d must be at least 1");
    long qi = require_prime_q(law.q, "make_moment_provider");
    if (!(law.chi > 0) || !std::isfinite(static_cast<double>(law.chi)))
        throw std::invalid_argument("make_moment_provider: chi must be positive and finite");

    auto st = std::make_shared<MomentState>();
    st->d = law.d;
    st->qi = qi;
    st->q = law.q;
    st->chi = law.chi;
    st->log2q = log2l(law.q);
    st->log2K = log2l((law.q - 1) * law.chi * law.d) - law.d * log2l(phi_value(law.q));

    MomentProvider mp;
    mp.d = law.d;
    mp.q = law.q;
    mp.s_sup = 1;
    mp.total_mass = 1;
    mp.C = [st](const Signature& lambda) -> BigReal {
        Partition lam = partition_from_lambda(lambda, st->d);
        ensure_precision(*st);
        if (st->d == 1) return moment_d1(*st, lam.empty() ? 0 : lam[0]);
        auto hit = st->cmemo.find(lam);
        if (hit != st->cmemo.end()) return hit->second;
        long w = weight(lam);
        BigReal val =
            bpow(BigReal((st->q - 1) * st->chi), w) / fact_big(*st, w) * nmax_big(*st, lam);
        return st->cmemo.emplace(std::move(lam), std::move(val)).first->second;
    };
    mp.log2_C_bound = [st](long t, long cap) -> Real {
        if (t < 0) return kLog2Floor;
        if (st->d == 1)
            return t * log2l(st->chi) + st->log2q * binom2(t + 1) - log2_factorial(t);
        long c = std::max(0L, std::min(cap, t));
        Real base = st->log2q * (binom2(t) + static_cast<Real>(st->d - 1) * binom2(c));
        Real best = kLog2Floor;
        for (long w = t; w <= t + (st->d - 1) * c; ++w)
            best = std::max(best, w * st->log2K - log2_factorial(w));
        return base + best;
    };
    // h_hat_beta vanishes off the dominance ideal, so |S_beta| is at most the
    // lower tail P(X_1 <= beta_1) of the first coordinate, whose marginal has
    // the d = 1 moments. Bounding the pmf series termwise gives
    // pmf(x) <= K e^{-chi q^{-x}}, and summing over x <= beta_1 costs a factor
    // 1.6 once chi q^{-beta_1} >= 1. This lets the inversion engine discard
    // the deep-beta inner sums, whose cancellation depth grows like q^{-beta_1}.
    {
        Real ksum = 0, poch = 1;
        for (long m = 0; m <= 200; ++m) {
            if (m) poch *= 1 - powl(1 / law.q, static_cast<Real>(m));
            Real t = exp2l(-binom2(m) * st->log2q) / poch;
            ksum += t;
            if (t < 1e-30L) break;
        }
        Real l2K = log2l(1.6L * ksum / phi_value(law.q));
        mp.log2_S_bound = [l2K, st](const Signature& beta) -> Real {
            Real l2u = log2l(st->chi) - static_cast<Real>(beta[0]) * st->log2q;
            if (l2u < 0) return 0;
            if (l2u > 60) return kLog2Floor;
            return std::min<Real>(0, l2K - exp2l(l2u) * kLog2E);
        };
    }
    return mp;
}

MomentProvider make_dirac_provider(long d, Real q, const XSignature& mu) {
    if (d < 1) throw std::invalid_argument("make_dirac_provider: d must be at least 1");
    if (!(q > 1)) throw std::invalid_argument("make_dirac_provider: q must exceed 1");
    if (static_cast<long>(mu.size()) != d || !is_xsignature(mu))
        throw std::invalid_argument("make_dirac_provider: mu must be a length-d extended signature");

    MomentProvider mp;
    mp.d = d;
    mp.q = q;
    mp.s_sup = 1;
    mp.total_mass = 1;
    mp.C = [d, q, mu](const Signature& lambda) -> BigReal {
        Partition lam = partition_from_lambda(lambda, d);
        long e = 0;
        for (size_t i = 0; i < lam.size(); ++i) {
            if (mu[i].is_neg_inf()) return BigReal(0);
            e += lam[i] * mu[i].v;
        }
        return bpow(BigReal(q), e);
    };
    mp.log2_C_bound = [d, q, mu](long t, long cap) -> Real {
        if (t < 0) return kLog2Floor;
        if (t == 0) return 0;
        if (mu[0].is_neg_inf()) return kLog2Floor;
        Real log2q = log2l(q);
        Real b = static_cast<Real>(t) * mu[0].v * log2q;
        long c = std::max(0L, std::min(cap, t));
        for (long i = 2; i <= d; ++i)
            if (mu[i - 1].finite && mu[i - 1].v > 0) b += static_cast<Real>(c) * mu[i - 1].v * log2q;
        return b;
    };
    // S_beta equals h_hat_beta(mu) exactly, which vanishes unless mu <= beta.
    mp.log2_S_bound = [mu](const Signature& beta) -> Real {
        return dominance_leq(mu, to_xsignature(beta)) ? 0 : kLog2Floor;
    };
    return mp;
}

InversionEngine::InversionEngine(MomentProvider provider) : provider_(std::move(provider)) {
    if (provider_.d < 1) throw std::invalid_argument("InversionEngine: provider must set d >= 1");
    if (!(provider_.q > 1)) throw std::invalid_argument("InversionEngine: provider must set q > 1");
    if (!provider_.C || !provider_.log2_C_bound)
        throw std::invalid_argument("InversionEngine: provider must supply C and log2_C_bound");
    if (!(provider_.s_sup > 0) || !(provider_.total_mass >= 0))
        throw std::invalid_argument("InversionEngine: provider envelope constants are invalid");
    log2q_ = log2l(provider_.q);
    poch_inf_ = qpoch_expi(1, 1 / provider_.q, kInfinity);
    poch_table_.assign(1, 1);
    ensure_poch(64);
}

void InversionEngine::ensure_poch(long k) {
    const Real qinv = 1 / provider_.q;
    while (static_cast<long>(poch_table_.size()) <= k) {
        long t = static_cast<long>(poch_table_.size());
        poch_table_.push_back(poch_table_.back() * (1 - powl(qinv, static_cast<Real>(t))));
    }
}

Real InversionEngine::weight_coefficient(const Signature& nu, const Signature& beta,
                                         bool cdf) const {
    const long d = provider_.d;
    Real w = 1;
    long s = 0;
    for (long i = 1; i <= d; ++i) {
        s += nu[i - 1] - beta[i - 1];
        if (s < 0) return 0;
        Real den = poch_table_[s];
        if (i == 1) {
            den *= poch_inf_;
        } else {
            long m = beta[i - 2] - beta[i - 1] - s;
            if (m < 0) return 0;
            den *= m < static_cast<long>(poch_table_.size()) ? poch_table_[m] : poch_inf_;
        }
        long expo = cdf ? binom2(s + 1) : binom2(s);
        Real num = (s & 1) ? -1 : 1;
        w *= num * exp2l(-expo * log2q_) / den;
    }
    return w;
}

Real InversionEngine::beta_tail_bound(const Signature& nu, long depth) const {
    const long d = provider_.d;
    const Real spread = static_cast<Real>(nu.front() - nu.back());
    Real total = 0;
    for (long t = depth + 1; t <= depth + 400; ++t) {
        Real l2 = -binom2(t) * log2q_;
        if (l2 < -16000) break;
        total += powl(spread + t + 1, static_cast<Real>(d - 1)) * exp2l(l2);
    }
    return powl(poch_inf_, static_cast<Real>(-2 * d)) * provider_.s_sup * total;
}

InversionEngine::SEntry InversionEngine::spectral_sum(const Signature& beta, Real target) {
    const long d = provider_.d;
    const long s_box = beta.front() - beta.back();

    // log2 of the summed absolute coefficients of the finite factors
    Real l2prod = 0;
    {
        std::vector<long> B(d + 1, 0);
        for (long t = 1; t <= d; ++t) B[t] = B[t - 1] + beta[t - 1];
        for (long i = 2; i <= d; ++i)
            for (long j = B[i] + 1; j <= B[i - 2] + 2 * beta[i - 2]; ++j) {
                Real a = -j * log2q_;
                l2prod += a > 30 ? a : log2l(1 + exp2l(a));
            }
    }

    const Real l2phi = log2l(poch_inf_);
    const Real l2target = log2l(target);
    Real peak = kLog2Floor;
    Real env = 0;
    long cut = -1;
    Real prev_env = 1e30L;
    long decreasing = 0;
    for (long e1 = 0; e1 <= 2000000; ++e1) {
        Real l2c1 = (-static_cast<Real>(beta[0]) * e1 - binom2(e1 + 1)) * log2q_ - l2phi;
        Real l2c = kLog2Floor;
        for (long lam1 = e1; lam1 <= e1 + s_box; ++lam1)
            l2c = std::max(l2c, provider_.log2_C_bound(lam1, s_box));
        env = l2c1 + l2prod + l2c;
        peak = std::max(peak, env);
        decreasing = env < prev_env - 1 ? decreasing + 1 : 0;
        prev_env = env;
        if (decreasing >= 3 && env <= l2target - 8) {
            cut = e1;
            break;
        }
    }
    if (cut < 0)
        throw NonConvergence("invert: term envelope did not decay; the moments grow too fast");

    long prec = static_cast<long>(ceill(std::max<Real>(0, peak) - l2target)) + 64 +
                static_cast<long>(ceill(log2l(static_cast<Real>(cut) + 2)));
    prec = std::max(prec, 192L);
    if (prec > (1L << 18))
        throw TruncationInsufficient("invert: required working precision exceeds 262144 bits");
    prec = static_cast<long>(std::bit_ceil(static_cast<unsigned long>(prec)));

    PrecisionGuard guard(prec);
    const BigReal qb(provider_.q);
    auto polys = finite_factor_polys(d, provider_.q, beta);
    BigReal sum = 0;
    BigReal c1 = 1;
    const BigReal qinvb = 1 / qb;
    BigReal qp_num = bpow(qb, -beta[0]);  // q^{-beta_1 - e1} once inside the loop
    BigReal qp_den = 1;                   // q^{-e1}
    std::vector<long> e(d, 0);
    Signature lam(d, 0);
    std::function<void(long, const BigReal&)> rec = [&](long i, const BigReal& acc) {
        if (i == d) {
            lam[d - 1] = e[d - 1];
            for (long t = d - 2; t >= 0; --t) lam[t] = lam[t + 1] + e[t];
            BigReal term = acc * provider_.C(lam);
            if (perturb_eps_ != 0 && e[0] == 1 && lam[0] == 1) term *= 1 + BigReal(perturb_eps_);
            sum += term;
            return;
        }
        const auto& poly = polys[i - 1];
        for (e[i] = 0; e[i] < static_cast<long>(poly.size()); ++e[i])
            rec(i + 1, BigReal(acc * poly[e[i]]));
        e[i] = 0;
    };
    for (e[0] = 0; e[0] <= cut; ++e[0]) {
        if (e[0] > 0) {
            qp_num *= qinvb;
            qp_den *= qinvb;
            c1 *= -qp_num / (1 - qp_den);
        }
        rec(1, c1);
    }

    SEntry out;
    out.value = sum.convert_to<Real>();
    out.tail = exp2l(env) + exp2l(peak + log2l(static_cast<Real>(cut) + 2) + 8 - prec);
    return out;
}

ValueWithTail InversionEngine::invert_weight_impl(const Signature& nu, Real tol, bool cdf) {
    if (static_cast<long>(nu.size()) != provider_.d || !is_signature(nu))
        throw std::invalid_argument("invert: nu must be a length-d signature");
    if (!(tol > 0)) throw std::invalid_argument("invert: tol must be positive");

    long depth = 1;
    while (depth <= 150 && beta_tail_bound(nu, depth) > tol / 4) ++depth;
    if (depth > 150)
        throw TruncationInsufficient("invert: beta tail not certifiable at depth 150");
    Real tail = beta_tail_bound(nu, depth);

    auto betas = dominated_box(nu, depth);
    ensure_poch(provider_.d * (nu.front() - nu.back() + depth) + 2);
    std::vector<Real> ws(betas.size());
    Real sumw = 0;
    for (size_t i = 0; i < betas.size(); ++i) {
        ws[i] = weight_coefficient(nu, betas[i], cdf);
        sumw += fabsl(ws[i]);
    }

    const Real skip = tol / 4 / std::max<Real>(1, static_cast<Real>(betas.size()));
    // Power-of-two target so neighbouring nu agree on it and reuse the cache.
    const Real eps_s = exp2l(floorl(log2l(tol / 4 / std::max<Real>(1, sumw))));
    Real value = 0;
    for (size_t i = 0; i < betas.size(); ++i) {
        Real aw = fabsl(ws[i]);
        Real sup = provider_.s_sup;
        if (provider_.log2_S_bound)
            sup = std::min(sup, exp2l(std::min<Real>(0, provider_.log2_S_bound(betas[i]))));
        if (aw * sup <= skip) {
            tail += aw * sup;
            continue;
        }
        auto it = s_cache_.find(betas[i]);
        if (it == s_cache_.end() || it->second.tail > eps_s) {
            SEntry se = spectral_sum(betas[i], eps_s / 16);
            it = s_cache_.insert_or_assign(betas[i], se).first;
        }
        value += ws[i] * it->second.value;
        tail += aw * it->second.tail;
    }
    if (tail > tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "invert: reported tail bound %.3Le exceeds tol %.3Le",
                      tail, tol);
        throw TruncationInsufficient(buf);
    }
    return {value, tail};
}

ValueWithTail InversionEngine::invert_weight(const Signature& nu, Real tol) {
    return invert_weight_impl(nu, tol, false);
}

ValueWithTail InversionEngine::invert_cdf(const Signature& nu, Real tol) {
    if (provider_.d == 1) return invert_weight_impl(nu, tol, true);
    if (static_cast<long>(nu.size()) != provider_.d || !is_signature(nu))
        throw std::invalid_argument("invert: nu must be a length-d signature");
    if (!(tol > 0)) throw std::invalid_argument("invert: tol must be positive");

    // For d >= 2 the telescoped one-line formula breaks down, so accumulate
    // the weights over the dominance ideal, deepening until the marginal mass
    // stalls. A stall is certified once the accumulated mass accounts for the
    // provider's total; before that the stall margin is an estimate only,
    // since dominance-lower tails are invisible to any finite moment set.
    std::set<Signature> seen;
    const Real per_tol = tol / 65536;
    Real value = 0;
    Real wtail = 0;
    Real delta_prev = std::numeric_limits<Real>::infinity();
    for (long depth = 1; depth <= 60; ++depth) {
        auto box = dominated_box(nu, depth);
        if (box.size() > 8192)
            throw TruncationInsufficient("invert_cdf: dominance ideal too wide to certify");
        Real delta = 0;
        for (const auto& mu : box) {
            if (!seen.insert(mu).second) continue;
            ValueWithTail vw = invert_weight_impl(mu, per_tol, false);
            value += vw.value;
            wtail += vw.tail_bound;
            delta += std::max<Real>(vw.value, 0);
        }
        bool stalled = depth >= 2 && delta <= tol / 8 && delta_prev <= tol / 8;
        bool accounted = value >= provider_.total_mass - tol / 2;
        if ((stalled && depth >= 24) || (stalled && accounted)) {
            Real tail = wtail + 2 * (delta + delta_prev);
            if (accounted) tail += std::max<Real>(0, provider_.total_mass - value);
            if (tail > tol) break;
            return {value, tail};
        }
        delta_prev = delta;
    }
    throw TruncationInsufficient("invert_cdf: ideal mass did not stall within depth 60");
}

ValueWithTail invert_weight(const Signature& nu, const MomentProvider& provider, Real tol) {
    InversionEngine engine(provider);
    return engine.invert_weight(nu, tol);
}

ValueWithTail invert_cdf(const Signature& nu, const MomentProvider& provider, Real tol) {
    InversionEngine engine(provider);
    return engine.invert_cdf(nu, tol);
}

QBinomialResiduals check_qbinomial_identities(long n, XInt m, Real q, Real tol) {
    if (!(q > 1)) throw std::invalid_argument("check_qbinomial_identities: q must exceed 1");
    if (!(tol > 0)) throw std::invalid_argument("check_qbinomial_identities: tol must be positive");
    const Real qinv = 1 / q;
    const Real log2q = log2l(q);
    const Real ptol = tol * 1e-3;
    Real sum_w = 0, sum_c = 0;
    for (long s = 0; s <= 100000; ++s) {
        long b = n - s;
        if (m.finite && b < m.v) break;
        if (!m.finite && s >= 2 && exp2l(-binom2(s) * log2q) < ptol) break;
        Real f1 = qpoch_expi(s + 1, qinv, kInfinity, ptol);
        Real f2 = m.finite ? qpoch_expi(b - m.v + 1, qinv, kInfinity, ptol) : 1;
        Real sign = (s & 1) ? -1 : 1;
        sum_w += sign * exp2l(-binom2(s) * log2q) * f1 * f2;
        sum_c += sign * exp2l(-binom2(s + 1) * log2q) * f1 * f2;
    }
    const Real phi2 = powl(qpoch_expi(1, qinv, kInfinity, ptol), 2);
    sum_w /= phi2;
    sum_c /= phi2;
    Real want_w = m.finite && n == m.v ? 1 : 0;
    Real want_c = m <= XInt(n) ? 1 : 0;
    return {fabsl(sum_w - want_w), fabsl(sum_c - want_c)};
}

}  // namespace coklab
