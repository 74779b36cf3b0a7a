#include "coklab/verify.hpp"

#include "coklab/brute_force.hpp"
#include "coklab/cokernel.hpp"
#include "coklab/limit_laws.hpp"
#include "coklab/montecarlo.hpp"
#include "coklab/pgroups.hpp"
#include "coklab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace coklab {

namespace {

std::string fmt(Real x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3Lg", x);
    return buf;
}

void add(VerifyReport& rep, const std::string& suite, const std::string& name, bool pass,
         const std::string& detail) {
    rep.checks.push_back({suite, name, pass, detail});
    if (!pass) ++rep.failures;
}

void suite_qpoch(VerifyReport& rep) {
    const char* suite = "qpoch";

    Real worst = 0;
    for (Real qinv : {0.5L, 0.25L, 0.8L})
        for (Real a : {-1.5L, -0.4L, 0.3L, 0.9L})
            for (long k = 1; k <= 6; ++k) {
                Real full = qpoch({a, qinv, k}).value;
                Real step = qpoch({a, qinv, k - 1}).value * (1 - a * powl(qinv, (Real)(k - 1)));
                worst = std::max(worst, fabsl(full - step));
            }
    add(rep, suite, "finite product telescopes", worst < 1e-15L, "max gap " + fmt(worst));

    bool sym_ok = true, pascal_ok = true;
    for (long p : {2L, 3L})
        for (long n = 0; n <= 8; ++n)
            for (long k = 0; k <= n; ++k) {
                ExactInt lhs = gaussian_binomial_exact(n, k, p);
                if (lhs != gaussian_binomial_exact(n, n - k, p)) sym_ok = false;
                if (n > 0 && k > 0) {
                    ExactInt rhs = gaussian_binomial_exact(n - 1, k - 1, p) +
                                   ipow(ExactInt(p), (unsigned long)k) *
                                       gaussian_binomial_exact(n - 1, k, p);
                    if (lhs != rhs) pascal_ok = false;
                }
            }
    add(rep, suite, "gaussian binomial symmetry", sym_ok, "p in {2,3}, n <= 8");
    add(rep, suite, "gaussian binomial pascal rule", pascal_ok, "p in {2,3}, n <= 8");

    Real worst_w = 0, worst_c = 0;
    for (Real q : {1.5L, 2.0L})
        for (long n = -3; n <= 3; ++n) {
            for (long m = -3; m <= 3; ++m) {
                QBinomialResiduals r = check_qbinomial_identities(n, XInt(m), q);
                worst_w = std::max(worst_w, r.weight_residual);
                worst_c = std::max(worst_c, r.cdf_residual);
            }
            QBinomialResiduals r = check_qbinomial_identities(n, XInt::neg_inf(), q);
            worst_w = std::max(worst_w, r.weight_residual);
            worst_c = std::max(worst_c, r.cdf_residual);
        }
    add(rep, suite, "q-binomial weight identity", worst_w <= 1e-9L, "max residual " + fmt(worst_w));
    add(rep, suite, "q-binomial cdf identity", worst_c <= 1e-9L, "max residual " + fmt(worst_c));
}

void suite_partitions(VerifyReport& rep) {
    const char* suite = "partitions";

    bool invol = true, weights = true;
    for (const Partition& lam : partitions_up_to(8)) {
        Partition c = conjugate(lam);
        if (!is_partition(c) || conjugate(c) != lam) invol = false;
        if (weight(c) != weight(lam)) weights = false;
    }
    add(rep, suite, "conjugation is a weight-preserving involution", invol && weights,
        "all partitions of weight <= 8");

    bool refl = true, antisym = true, trans = true;
    std::vector<Signature> sigs;
    for (long a = -2; a <= 2; ++a)
        for (long b = -2; b <= a; ++b) sigs.push_back({a, b});
    for (const Signature& x : sigs) {
        if (!dominance_leq(x, x)) refl = false;
        for (const Signature& y : sigs) {
            if (dominance_leq(x, y) && dominance_leq(y, x) && x != y) antisym = false;
            for (const Signature& z : sigs)
                if (dominance_leq(x, y) && dominance_leq(y, z) && !dominance_leq(x, z))
                    trans = false;
        }
    }
    add(rep, suite, "dominance order is a partial order", refl && antisym && trans,
        "depth-2 grid [-2,2]");
}

void suite_pgroups(VerifyReport& rep) {
    const char* suite = "pgroups";

    bool census_ok = true;
    std::string census_detail;
    struct Case { long p; Partition lam; };
    for (const Case& c : {Case{2, {2, 1}}, Case{2, {1, 1, 1}}, Case{3, {2}}, Case{3, {1, 1}}}) {
        SubgroupCensus census = brute_force_subgroups({c.p, c.lam});
        ExactInt total = 0;
        for (const Partition& mu : partitions_up_to(weight(c.lam))) {
            ExactInt formula = subgroup_count(mu, c.lam, c.p);
            auto it = census.by_type.find(mu);
            ExactInt enumerated = it == census.by_type.end() ? ExactInt(0) : it->second;
            if (formula != enumerated) census_ok = false;
            total += formula;
        }
        if (total != census.total) census_ok = false;
    }
    add(rep, suite, "subgroup counts match enumeration", census_ok,
        "p in {2,3}, groups up to order 8");

    bool sur_ok = true;
    for (const Partition& mu : {Partition{2}, Partition{1, 1}, Partition{2, 1}})
        for (const Partition& lam : {Partition{1}, Partition{1, 1}, Partition{2}})
            if (sur_count(mu, lam, 2) != brute_force_sur_count(mu, lam, 2)) sur_ok = false;
    add(rep, suite, "surjection counts match enumeration", sur_ok, "order <= 8 pairs, p = 2");

    bool chain_ok = true;
    for (long p : {2L, 3L}) {
        for (long k = 1; k <= 5; ++k)
            if (chain_count({p, {1}}, k) != k) chain_ok = false;
        if (chain_count({p, {2, 1}}, 1) != 1) chain_ok = false;
    }
    add(rep, suite, "chain counts: n_k(Z/p) = k and n_1 = 1", chain_ok, "k <= 5");

    bool hom_ok = true;
    for (const Partition& mu : {Partition{2, 1}, Partition{1, 1}}) {
        for (const Partition& lam : {Partition{1, 1}, Partition{2}}) {
            ExactInt total = 0;
            for (const Partition& nu : partitions_up_to(weight(lam)))
                total += subgroup_count(nu, lam, 2) * sur_count(mu, nu, 2);
            if (total != hom_count(mu, lam, 2)) hom_ok = false;
        }
    }
    add(rep, suite, "hom count splits over subgroup images", hom_ok, "order <= 8 pairs, p = 2");
}

void suite_qseries(VerifyReport& rep) {
    const char* suite = "qseries";

    std::vector<Signature> betas2, mus2;
    for (long a = -2; a <= 2; ++a)
        for (long b = -2; b <= a; ++b) betas2.push_back({a, b});
    mus2 = betas2;

    bool range_ok = true, gate_ok = true;
    for (const Signature& beta : betas2)
        for (const Signature& mu : mus2) {
            Real h = h_hat(2, 2, beta, to_xsignature(mu));
            if (h < 0 || h > 1) range_ok = false;
            bool dom = dominance_leq(to_xsignature(mu), to_xsignature(beta));
            if (dom != (h != 0)) gate_ok = false;
        }
    add(rep, suite, "h_hat lies in [0,1]", range_ok, "depth-2 grid [-2,2]");
    add(rep, suite, "h_hat vanishes exactly off the dominance ideal", gate_ok,
        "depth-2 grid [-2,2]");

    Real worst_eval = 0, worst_bound = -1;
    for (const Signature& beta : {Signature{1, 0}, Signature{0, -1}, Signature{2, -1}}) {
        HSeries hs = h_series(2, 2, beta, 24);
        for (const Signature& mu : mus2) {
            if (!dominance_leq(to_xsignature(mu), to_xsignature(beta))) continue;
            Real direct = h_hat(2, 2, beta, to_xsignature(mu));
            Real series = static_cast<Real>(hs.eval(to_xsignature(mu)));
            worst_eval = std::max(worst_eval, fabsl(direct - series));
        }
        for (long l1 = 0; l1 <= hs.lambda1_max; ++l1)
            for (long l2 = 0; l2 <= std::min(l1, (long)4); ++l2) {
                long e1 = l1 - l2;
                Real cap = exp2l(hs.log2_E) *
                           powl(2, -static_cast<Real>(beta[0] * e1 + binom2(e1 + 1)));
                Real a = fabsl(static_cast<Real>(hs.coeff({l1, l2})));
                if (cap > 0) worst_bound = std::max(worst_bound, a / cap - 1);
            }
    }
    add(rep, suite, "series evaluation matches the closed product", worst_eval <= 1e-8L,
        "max gap " + fmt(worst_eval));
    add(rep, suite, "series coefficients respect the stated envelope", worst_bound <= 1e-12L,
        "max excess " + fmt(worst_bound));

    Real clean = 0, perturbed = 0;
    {
        XSignature mu = to_xsignature(Signature{0, -1});
        InversionEngine engine(make_dirac_provider(2, 2, mu));
        for (const Signature& nu : betas2) {
            Real want = nu == Signature{0, -1} ? 1 : 0;
            clean = std::max(clean, fabsl(engine.invert_weight(nu, 1e-8L).value - want));
        }
        engine.perturb_first_coefficient(1e-3L);
        for (const Signature& nu : betas2) {
            Real want = nu == Signature{0, -1} ? 1 : 0;
            perturbed = std::max(perturbed, fabsl(engine.invert_weight(nu, 1e-8L).value - want));
        }
    }
    add(rep, suite, "point-mass inversion identity", clean <= 1e-6L, "max residual " + fmt(clean));
    add(rep, suite, "identity breaks under 1e-3 coefficient perturbation", perturbed > 1e-6L,
        "perturbed residual " + fmt(perturbed));
}

void suite_cokernel(VerifyReport& rep) {
    const char* suite = "cokernel";

    bool parse_ok = true;
    for (const char* text : {"uniform", "interval:3", "support:0=1/2,1=1/4,3=1/4"}) {
        DistSpec spec = parse_dist_spec(text);
        if (format_dist_spec(spec) != text) parse_ok = false;
    }
    add(rep, suite, "dist spec parse/format round trip", parse_ok, "three grammar forms");

    bool reject_ok = false;
    try {
        make_distribution(parse_dist_spec("support:0=1/2,1=1/3"), 2);
    } catch (const std::invalid_argument&) {
        reject_ok = true;
    }
    bool degen_ok = false;
    try {
        make_distribution(parse_dist_spec("support:0=1"), 2);
    } catch (const DegenerateDistribution&) {
        degen_ok = true;
    }
    add(rep, suite, "weights must sum to one", reject_ok, "support:0=1/2,1=1/3 rejected");
    add(rep, suite, "distributions degenerate mod p are rejected", degen_ok,
        "point mass at 0 rejected");

    bool snf_ok = true;
    {
        MatrixModPL m;
        m.n = 3;
        m.ring = make_ring(2, 3);
        m.entries = {1, 0, 0, 0, 2, 0, 0, 0, 4};
        if (smith_valuations(m) != std::vector<long>({0, 1, 2})) snf_ok = false;
        m.entries = {0, 0, 0, 0, 0, 0, 0, 0, 0};
        if (smith_valuations(m) != std::vector<long>({3, 3, 3})) snf_ok = false;
        m.entries = {2, 4, 0, 4, 2, 2, 0, 2, 1};
        std::vector<long> vals = smith_valuations(m);
        if (vals != std::vector<long>({0, 1, 1})) snf_ok = false;
        if (rank_vector(vals, 3) != RankVector({2, 0, 0})) snf_ok = false;
    }
    add(rep, suite, "smith valuations on pinned matrices", snf_ok, "diagonal, zero, mixed");

    bool packed_ok = true;
    for (uint64_t seed = 0; seed < 8; ++seed) {
        EntryDistribution dist = make_distribution({}, 2);
        CounterRng a(substream_seed(99, seed)), b(substream_seed(99, seed));
        RankVector fast = sample_cokernel_ranks(dist, 24, 3, 2, 1, a);
        MatrixModPL prod = sample_matrix(dist, 24, make_ring(2, 1), b);
        for (long i = 1; i < 3; ++i)
            prod = multiply(prod, sample_matrix(dist, 24, make_ring(2, 1), b));
        if (fast != rank_vector(smith_valuations(prod), 1)) packed_ok = false;
    }
    add(rep, suite, "packed mod-2 path agrees with the general path", packed_ok,
        "8 seeded products, n = 24, k = 3");

    Real worst = 0;
    for (long p : {2L, 3L})
        for (long x = -3; x <= 5; ++x)
            worst = std::max(worst, fabsl(pmf_d1(x, p, 1.0L / p).value - pmf_d1(x + 1, p, 1).value));
    add(rep, suite, "scale step chi -> chi/p shifts the law by one", worst <= 1e-12L,
        "max gap " + fmt(worst));
}

void suite_montecarlo(VerifyReport& rep) {
    const char* suite = "montecarlo";

    ExperimentConfig cfg;
    cfg.p = 2;
    cfg.d = 2;
    cfg.n = 6;
    cfg.k = 2;
    cfg.samples = 400;
    cfg.master_seed = 2718;
    cfg.threads = 1;
    SampleTable t1 = run_experiment(cfg);
    cfg.threads = 4;
    SampleTable t4 = run_experiment(cfg);
    std::ostringstream s1, s4;
    write_csv(t1, s1);
    write_csv(t4, s4);
    add(rep, suite, "thread count does not change the table", s1.str() == s4.str(),
        "threads 1 vs 4, byte compare");

    std::istringstream back(s4.str());
    SampleTable rt = read_csv(back);
    add(rep, suite, "csv round trip", rt.rows == t4.rows && rt.config.master_seed == 2718,
        "400 rows");

    Real mass = 0;
    for (const auto& [nu, w] : empirical_pmf(t4, 1)) mass += w;
    add(rep, suite, "empirical pmf sums to one", fabsl(mass - 1) <= 1e-12L,
        "gap " + fmt(fabsl(mass - 1)));

    MomentEstimate sm = empirical_sur_moment(t4, {});
    add(rep, suite, "trivial sur moment is exactly one", sm.estimate == 1 && sm.std_error == 0,
        "estimate " + fmt(sm.estimate));
}

}  // namespace

std::vector<std::string> verify_suite_names() {
    return {"qpoch", "partitions", "pgroups", "qseries", "cokernel", "montecarlo"};
}

VerifyReport run_verify_suite(const std::string& selector) {
    VerifyReport rep;
    auto want = [&](const char* name) {
        return selector.empty() || selector == "all" || selector == name;
    };
    bool known = selector.empty() || selector == "all";
    for (const std::string& name : verify_suite_names()) known = known || selector == name;
    if (!known) throw std::invalid_argument("run_verify_suite: unknown suite " + selector);

    if (want("qpoch")) rep.suites.push_back("qpoch"), suite_qpoch(rep);
    if (want("partitions")) rep.suites.push_back("partitions"), suite_partitions(rep);
    if (want("pgroups")) rep.suites.push_back("pgroups"), suite_pgroups(rep);
    if (want("qseries")) rep.suites.push_back("qseries"), suite_qseries(rep);
    if (want("cokernel")) rep.suites.push_back("cokernel"), suite_cokernel(rep);
    if (want("montecarlo")) rep.suites.push_back("montecarlo"), suite_montecarlo(rep);
    return rep;
}

std::string verify_json(const VerifyReport& rep) {
    using json = nlohmann::ordered_json;
    json j;
    j["suites"] = rep.suites;
    j["checks"] = json::array();
    for (const CheckResult& c : rep.checks)
        j["checks"].push_back(
            {{"suite", c.suite}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["total"] = rep.checks.size();
    j["failures"] = rep.failures;
    return j.dump(2) + "\n";
}

}  // namespace coklab
