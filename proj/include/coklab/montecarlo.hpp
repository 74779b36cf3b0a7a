#pragma once

#include "coklab/cokernel.hpp"
#include "coklab/limit_laws.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace coklab {

struct ExperimentConfig {
    long p = 2;
    long d = 1;
    long n = 1;
    long k = 1;
    long samples = 1;
    DistSpec dist;
    uint64_t master_seed = 0;
    long threads = 1;      // <= 0: hardware concurrency
    std::string out_path;  // empty: keep the table in memory only
};

// Rows are indexed by sample_id; row i is drawn from the substream keyed by
// (master_seed, i), so the table is identical for any thread count.
struct SampleTable {
    ExperimentConfig config;
    Real alpha = 0;
    std::vector<RankVector> rows;
};

SampleTable run_experiment(const ExperimentConfig& cfg);

// CSV schema: '# key=value' metadata lines (p, d, n, k, samples, dist, seed,
// alpha, real_precision), one 'sample_id,r_1,...,r_d' header, LF endings.
void write_csv(const SampleTable& table, std::ostream& out);
SampleTable read_csv(std::istream& in);
SampleTable read_csv_file(const std::string& path);

struct MomentEstimate {
    Real estimate = 0;
    Real std_error = 0;
};

// Mean of p^{sum_i lambda_i r_i} / k^{|lambda|} over rows; the sampled
// analogue of the normalized Hom-count moment, which converges to the
// moment C_lambda of the limit law.
MomentEstimate empirical_normalized_moment(const SampleTable& table, const Partition& lambda);

// Mean of #Sur(cokernel mod p^d, G_{lambda'}) over rows; converges to the
// chain count n_k(G_{lambda'}). Requires the table depth to resolve the
// target: lambda must have at most d parts.
MomentEstimate empirical_sur_moment(const SampleTable& table, const Partition& lambda);

// Frequencies of the centered rank vectors (r_1 - center, ..., r_d - center).
std::map<Signature, Real> empirical_pmf(const SampleTable& table, long center);

// Nearest integer to log_p k, rounding half up.
long default_center(long p, long k);

// Everything TV cannot see inside the window is accounted on the right:
// TV <= window_l1/2 + (emp_outside + theory_outside)/2 + theory_error.
struct TvBreakdown {
    Real tv_bound = 0;
    Real window_l1 = 0;
    Real emp_outside = 0;
    Real theory_outside = 0;
    Real theory_error = 0;
};

TvBreakdown tv_report(const std::map<Signature, Real>& emp, const LimitLaw& law, long window_lo,
                      long window_hi, Real theory_tol);

// Window and tolerance chosen per dimension: d = 1 widens the window until
// the pmf is negligible; d >= 2 uses [-3,3]^d at per-cell tolerance 1e-3
// (deeper cells cost precision that grows like q^{|window floor|}).
Real tv_distance(const std::map<Signature, Real>& emp, const LimitLaw& law);

struct ComparisonReport {
    long p = 2;
    long d = 1;
    long n = 0;
    long k = 1;
    long samples = 0;
    Real chi = 1;
    long center = 0;

    struct MomentRow {
        Partition lambda;
        Real empirical = 0;
        Real std_error = 0;
        Real theory = 0;
    };
    std::vector<MomentRow> moments;

    struct PmfRow {
        Signature nu;
        Real empirical = 0;
        Real theory = 0;
    };
    std::vector<PmfRow> pmf;

    TvBreakdown tv;
};

ComparisonReport compare_experiment(const SampleTable& table, Real chi, long center);

// Serialized JSON with the documented stable key order.
std::string report_json(const ComparisonReport& rep);

}  // namespace coklab
