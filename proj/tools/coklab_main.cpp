#include "coklab/cokernel.hpp"
#include "coklab/limit_laws.hpp"
#include "coklab/montecarlo.hpp"
#include "coklab/pgroups.hpp"
#include "coklab/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

using namespace coklab;

Partition parse_partition_arg(const std::string& text, const char* what) {
    try {
        return parse_partition(text);
    } catch (const std::exception& e) {
        throw CLI::ValidationError(std::string(what) + ": " + e.what());
    }
}

Signature parse_signature_arg(const std::string& text, const char* what) {
    try {
        return parse_signature(text);
    } catch (const std::exception& e) {
        throw CLI::ValidationError(std::string(what) + ": " + e.what());
    }
}

void parse_range(const std::string& text, long& lo, long& hi) {
    size_t dots = text.find("..");
    if (dots == std::string::npos)
        throw CLI::ValidationError("--range expects A..B, got '" + text + "'");
    try {
        lo = std::stol(text.substr(0, dots));
        hi = std::stol(text.substr(dots + 2));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--range expects A..B, got '" + text + "'");
    }
    if (lo > hi) throw CLI::ValidationError("--range is empty");
}

std::string fmt_real(Real x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12Lg", x);
    return buf;
}

void box_signatures(long d, long lo, long hi, Signature& cur, std::vector<Signature>& out) {
    if (static_cast<long>(cur.size()) == d) {
        out.push_back(cur);
        return;
    }
    long cap = cur.empty() ? hi : cur.back();
    for (long v = cap; v >= lo; --v) {
        cur.push_back(v);
        box_signatures(d, lo, hi, cur, out);
        cur.pop_back();
    }
}

int run_chains(long p, const std::string& lambda_text, long k, long kmax, bool show_max) {
    Partition lam = parse_partition_arg(lambda_text, "--lambda");
    if (!is_partition(lam)) throw CLI::ValidationError("--lambda must be a partition");
    AbelianPGroup G{p, lam};
    if (show_max) std::printf("# n_max\t%s\n", max_chain_count(G).get_str().c_str());
    std::printf("k\tn_k\tn_k_over_binom\n");
    long from = k >= 0 ? k : 1;
    long to = k >= 0 ? k : kmax;
    ExactInt w(weight(lam));
    for (long i = from; i <= to; ++i) {
        ExactInt nk = chain_count(G, i);
        std::string ratio = "-";
        if (i >= weight(lam)) {
            ExactRat r(nk, binomial_exact(i, weight(lam)));
            r.canonicalize();
            ratio = fmt_real(static_cast<Real>(r.get_d()));
        }
        std::printf("%ld\t%s\t%s\n", i, nk.get_str().c_str(), ratio.c_str());
    }
    return 0;
}

int run_limit(const std::string& mode, long d, long p, Real chi, const std::string& nu_text,
              const std::string& range_text, Real tol, long wmax,
              const std::string& lambda_text) {
    LimitLaw law{d, static_cast<Real>(p), chi};
    if (mode == "moments") {
        std::printf("lambda\tC_lambda\n");
        if (!lambda_text.empty()) {
            Partition lam = parse_partition_arg(lambda_text, "--lambda");
            std::printf("%s\t%s\n", format_partition(lam).c_str(), fmt_real(moment_C(law, lam)).c_str());
            return 0;
        }
        std::vector<Partition> lams;
        for (long w = 1; w <= wmax; ++w) {
            std::vector<Partition> stack{{}};
            while (!stack.empty()) {
                Partition cur = stack.back();
                stack.pop_back();
                long have = weight(cur);
                if (have == w) {
                    lams.push_back(cur);
                    continue;
                }
                long cap = cur.empty() ? w - have : std::min(cur.back(), w - have);
                if (static_cast<long>(cur.size()) == d) continue;
                for (long v = 1; v <= cap; ++v) {
                    Partition next = cur;
                    next.push_back(v);
                    stack.push_back(next);
                }
            }
        }
        for (const Partition& lam : lams)
            std::printf("%s\t%s\n", format_partition(lam).c_str(), fmt_real(moment_C(law, lam)).c_str());
        return 0;
    }

    std::vector<Signature> cells;
    if (!nu_text.empty()) {
        Signature nu = parse_signature_arg(nu_text, "--nu");
        if (static_cast<long>(nu.size()) != d || !is_signature(nu))
            throw CLI::ValidationError("--nu must be a weakly decreasing depth-d signature");
        cells.push_back(nu);
    } else {
        long lo = -6, hi = d == 1 ? 10 : 3;
        if (d > 1) lo = -3;
        if (!range_text.empty()) parse_range(range_text, lo, hi);
        Signature cur;
        box_signatures(d, lo, hi, cur, cells);
    }

    std::printf("nu\tvalue\ttail_bound\n");
    if (mode == "pmf" && d == 1) {
        for (const Signature& nu : cells) {
            ValueWithTail vw = pmf_d1(nu[0], law.q, law.chi, tol);
            std::printf("%s\t%s\t%s\n", format_signature(nu).c_str(), fmt_real(vw.value).c_str(),
                        fmt_real(vw.tail_bound).c_str());
        }
        return 0;
    }
    InversionEngine engine(make_moment_provider(law));
    for (const Signature& nu : cells) {
        ValueWithTail vw = mode == "cdf" ? engine.invert_cdf(nu, tol) : engine.invert_weight(nu, tol);
        std::printf("%s\t%s\t%s\n", format_signature(nu).c_str(), fmt_real(vw.value).c_str(),
                    fmt_real(vw.tail_bound).c_str());
    }
    return 0;
}

int run_simulate(const ExperimentConfig& cfg) {
    SampleTable table = run_experiment(cfg);
    std::fprintf(stderr, "wrote %zu rows to %s\n", table.rows.size(), cfg.out_path.c_str());
    return 0;
}

int run_compare(const std::string& table_path, Real chi, long center, bool center_set) {
    SampleTable table = read_csv_file(table_path);
    if (!center_set) center = default_center(table.config.p, table.config.k);
    ComparisonReport rep = compare_experiment(table, chi, center);
    std::fputs(report_json(rep).c_str(), stdout);
    return 0;
}

int run_verify(const std::string& suite) {
    VerifyReport rep = run_verify_suite(suite);
    std::fputs(verify_json(rep).c_str(), stdout);
    return rep.failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact chain counts, limit laws, and cokernel simulations"};
    app.require_subcommand(1);

    auto* chains = app.add_subcommand("chains", "chain counts n_k for a fixed group");
    long ch_p = 2, ch_k = -1, ch_kmax = 8;
    std::string ch_lambda;
    bool ch_max = false;
    chains->add_option("--p", ch_p, "prime")->required();
    chains->add_option("--lambda", ch_lambda, "group type, comma separated")->required();
    auto* ch_k_opt = chains->add_option("--k", ch_k, "single chain length");
    chains->add_option("--kmax", ch_kmax, "table up to this length")->excludes(ch_k_opt);
    chains->add_flag("--max", ch_max, "also print the maximal-chain count");

    auto* limit = app.add_subcommand("limit", "limit-law weights, cdf, and moments");
    std::string li_mode, li_nu, li_range, li_lambda;
    long li_d = 1, li_p = 2, li_wmax = 4;
    Real li_chi = 1, li_tol = 1e-6L;
    limit->add_option("mode", li_mode, "pmf | cdf | moments | invert")
        ->required()
        ->check(CLI::IsMember({"pmf", "cdf", "moments", "invert"}));
    limit->add_option("--d", li_d, "depth")->required();
    limit->add_option("--p", li_p, "prime")->required();
    limit->add_option("--chi", li_chi, "scale parameter");
    limit->add_option("--nu", li_nu, "single signature, comma separated");
    limit->add_option("--range", li_range, "coordinate window A..B");
    limit->add_option("--tol", li_tol, "certified tolerance per value");
    limit->add_option("--wmax", li_wmax, "moments: enumerate |lambda| up to this");
    limit->add_option("--lambda", li_lambda, "moments: single lambda");

    auto* simulate = app.add_subcommand("simulate", "sample cokernel rank vectors to CSV");
    ExperimentConfig cfg;
    std::string si_dist = "uniform";
    simulate->add_option("--p", cfg.p, "prime")->required();
    simulate->add_option("--d", cfg.d, "depth")->required();
    simulate->add_option("--n", cfg.n, "matrix size")->required();
    simulate->add_option("--k", cfg.k, "number of factors")->required();
    simulate->add_option("--samples", cfg.samples, "sample count")->required();
    simulate->add_option("--dist", si_dist, "uniform | interval:b | support:v=w,...");
    simulate->add_option("--seed", cfg.master_seed, "master seed")->required();
    simulate->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    simulate->add_option("--out", cfg.out_path, "output CSV path")->required();

    auto* compare = app.add_subcommand("compare", "compare a sample table with the limit law");
    std::string co_table;
    Real co_chi = 1;
    long co_center = 0;
    compare->add_option("--table", co_table, "CSV produced by simulate")->required();
    compare->add_option("--chi", co_chi, "scale parameter")->required();
    auto* co_center_opt = compare->add_option("--center", co_center, "centering (default <log_p k>)");

    auto* verify = app.add_subcommand("verify", "run the self-check suites");
    std::string ve_suite = "all";
    verify->add_option("--suite", ve_suite, "suite name or 'all'");

    CLI11_PARSE(app, argc, argv);

    try {
        if (chains->parsed())
            return run_chains(ch_p, ch_lambda, ch_k_opt->count() ? ch_k : -1, ch_kmax, ch_max);
        if (limit->parsed())
            return run_limit(li_mode, li_d, li_p, li_chi, li_nu, li_range, li_tol, li_wmax,
                             li_lambda);
        if (simulate->parsed()) {
            cfg.dist = coklab::parse_dist_spec(si_dist);
            return run_simulate(cfg);
        }
        if (compare->parsed())
            return run_compare(co_table, co_chi, co_center, co_center_opt->count() > 0);
        if (verify->parsed()) return run_verify(ve_suite);
    } catch (const coklab::TruncationInsufficient& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
