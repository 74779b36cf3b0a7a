#include "coklab/montecarlo.hpp"

#include "coklab/pgroups.hpp"
#include "coklab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace coklab {

namespace {

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.d < 1 || cfg.d > 20) throw std::invalid_argument("run_experiment: d must be in [1, 20]");
    if (cfg.n < 1) throw std::invalid_argument("run_experiment: n must be >= 1");
    if (cfg.k < 1) throw std::invalid_argument("run_experiment: k must be >= 1");
    if (cfg.samples < 1) throw std::invalid_argument("run_experiment: samples must be >= 1");
    make_ring(cfg.p, cfg.d);
}

std::string format_real(Real x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.21Lg", x);
    return buf;
}

void emit_header(std::ostream& out, const ExperimentConfig& cfg, Real alpha) {
    out << "# p=" << cfg.p << "\n";
    out << "# d=" << cfg.d << "\n";
    out << "# n=" << cfg.n << "\n";
    out << "# k=" << cfg.k << "\n";
    out << "# samples=" << cfg.samples << "\n";
    out << "# dist=" << format_dist_spec(cfg.dist) << "\n";
    out << "# seed=" << cfg.master_seed << "\n";
    out << "# alpha=" << format_real(alpha) << "\n";
    out << "# real_precision=" << std::numeric_limits<Real>::digits << "\n";
    out << "sample_id";
    for (long i = 1; i <= cfg.d; ++i) out << ",r_" << i;
    out << "\n";
}

void emit_row(std::ostream& out, long id, const RankVector& row) {
    out << id;
    for (long r : row) out << ',' << r;
    out << "\n";
}

void fill_rows(const ExperimentConfig& cfg, const EntryDistribution& dist,
               std::vector<RankVector>& rows, long start, long stop, long threads) {
    auto work = [&](long i) {
        CounterRng rng(substream_seed(cfg.master_seed, static_cast<uint64_t>(i)));
        rows[i] = sample_cokernel_ranks(dist, cfg.n, cfg.k, cfg.p, cfg.d, rng);
    };
    if (threads <= 1) {
        for (long i = start; i < stop; ++i) work(i);
        return;
    }
    std::atomic<long> next{start};
    std::exception_ptr err;
    std::mutex err_mu;
    auto runner = [&]() {
        while (true) {
            long i = next.fetch_add(1);
            if (i >= stop) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(stop);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (long t = 0; t < threads; ++t) pool.emplace_back(runner);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

Partition rank_type(const RankVector& row) {
    return conjugate(normalize_partition(row));
}

MomentEstimate mean_and_error(const std::vector<Real>& vals) {
    const long n = static_cast<long>(vals.size());
    Real sum = 0;
    for (Real v : vals) sum += v;
    Real mean = sum / n;
    if (n == 1) return {mean, 0};
    Real ss = 0;
    for (Real v : vals) ss += (v - mean) * (v - mean);
    return {mean, sqrtl(ss / (n - 1) / n)};
}

struct TheoryCell {
    Real value = 0;
    Real tail = 0;
};

void enumerate_box(long d, long lo, long hi, Signature& cur, std::vector<Signature>& out) {
    if (static_cast<long>(cur.size()) == d) {
        out.push_back(cur);
        return;
    }
    long cap = cur.empty() ? hi : cur.back();
    for (long v = cap; v >= lo; --v) {
        cur.push_back(v);
        enumerate_box(d, lo, hi, cur, out);
        cur.pop_back();
    }
}

// Theory weights on the window [lo, hi]^d. d = 1 is the alternating series;
// d >= 2 goes through moment inversion with one shared engine so the inner
// sums are computed once per beta.
std::map<Signature, TheoryCell> theory_window(const LimitLaw& law, long lo, long hi, Real tol) {
    if (lo > hi) throw std::invalid_argument("theory_window: empty window");
    std::map<Signature, TheoryCell> th;
    if (law.d == 1) {
        for (long x = lo; x <= hi; ++x) {
            ValueWithTail vw = pmf_d1(x, law.q, law.chi, tol);
            th[{x}] = {vw.value, vw.tail_bound};
        }
        return th;
    }
    std::vector<Signature> cells;
    Signature cur;
    enumerate_box(law.d, lo, hi, cur, cells);
    InversionEngine engine(make_moment_provider(law));
    for (const Signature& nu : cells) {
        ValueWithTail vw = engine.invert_weight(nu, tol);
        Real v = std::min<Real>(1, std::max<Real>(0, vw.value));
        th[nu] = {v, vw.tail_bound};
    }
    return th;
}

TvBreakdown fold_tv(const std::map<Signature, Real>& emp,
                    const std::map<Signature, TheoryCell>& th) {
    TvBreakdown b;
    Real theory_mass = 0;
    for (const auto& [nu, cell] : th) {
        auto it = emp.find(nu);
        Real e = it == emp.end() ? 0 : it->second;
        b.window_l1 += fabsl(e - cell.value);
        b.theory_error += cell.tail;
        theory_mass += cell.value;
    }
    for (const auto& [nu, e] : emp) {
        if (!th.count(nu)) b.emp_outside += e;
    }
    b.theory_outside = std::max<Real>(0, 1 - theory_mass);
    b.tv_bound = std::min<Real>(
        1, b.window_l1 / 2 + (b.emp_outside + b.theory_outside) / 2 + b.theory_error);
    return b;
}

// Expands [lo, hi] until the boundary weights drop below 1e-13; the d = 1
// pmf decays doubly exponentially on the left and like q^{-x^2/2} on the
// right, so a few extra cells suffice.
void auto_window_d1(const LimitLaw& law, long& lo, long& hi) {
    for (long i = 0; i < 400; ++i) {
        if (pmf_d1(lo - 1, law.q, law.chi, 1e-15L).value < 1e-13L) break;
        --lo;
    }
    for (long i = 0; i < 400; ++i) {
        if (pmf_d1(hi + 1, law.q, law.chi, 1e-15L).value < 1e-13L) break;
        ++hi;
    }
}

void check_emp(const std::map<Signature, Real>& emp, long d) {
    for (const auto& [nu, e] : emp) {
        if (static_cast<long>(nu.size()) != d || !is_signature(nu))
            throw std::invalid_argument("tv_distance: empirical key is not a depth-d signature");
        if (e < 0) throw std::invalid_argument("tv_distance: negative empirical weight");
    }
}

std::vector<Partition> default_lambdas(long d) {
    std::vector<Partition> all = {{1}, {2}, {1, 1}, {3}, {2, 1}, {1, 1, 1}};
    std::vector<Partition> out;
    for (const Partition& lam : all)
        if (static_cast<long>(lam.size()) <= d) out.push_back(lam);
    return out;
}

}  // namespace

SampleTable run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    EntryDistribution dist = make_distribution(cfg.dist, cfg.p);

    long threads = cfg.threads;
    if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<long>(threads, 256);

    SampleTable table;
    table.config = cfg;
    table.alpha = dist.alpha;
    table.rows.resize(cfg.samples);

    std::ofstream out;
    if (!cfg.out_path.empty()) {
        out.open(cfg.out_path, std::ios::binary);
        if (!out) throw std::runtime_error("run_experiment: cannot open " + cfg.out_path);
        emit_header(out, cfg, table.alpha);
    }

    const long block = 1024;
    for (long start = 0; start < cfg.samples; start += block) {
        long stop = std::min(cfg.samples, start + block);
        fill_rows(cfg, dist, table.rows, start, stop, threads);
        if (out.is_open()) {
            for (long i = start; i < stop; ++i) emit_row(out, i, table.rows[i]);
            out.flush();
        }
    }
    if (out.is_open() && !out)
        throw std::runtime_error("run_experiment: write failed for " + cfg.out_path);
    return table;
}

void write_csv(const SampleTable& table, std::ostream& out) {
    emit_header(out, table.config, table.alpha);
    for (long i = 0; i < static_cast<long>(table.rows.size()); ++i)
        emit_row(out, i, table.rows[i]);
}

SampleTable read_csv(std::istream& in) {
    SampleTable table;
    std::map<std::string, std::string> meta;
    std::string line;
    bool saw_header = false;
    long next_id = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            size_t at = line.find('=');
            if (at == std::string::npos) throw std::runtime_error("read_csv: bad metadata: " + line);
            std::string key = line.substr(1, at - 1);
            key.erase(0, key.find_first_not_of(' '));
            key.erase(key.find_last_not_of(' ') + 1);
            meta[key] = line.substr(at + 1);
            continue;
        }
        if (!saw_header) {
            if (line.rfind("sample_id", 0) != 0)
                throw std::runtime_error("read_csv: missing sample_id header");
            saw_header = true;
            for (const char* key : {"p", "d", "n", "k", "samples", "dist", "seed"})
                if (!meta.count(key))
                    throw std::runtime_error(std::string("read_csv: missing metadata key ") + key);
            table.config.p = std::stol(meta["p"]);
            table.config.d = std::stol(meta["d"]);
            table.config.n = std::stol(meta["n"]);
            table.config.k = std::stol(meta["k"]);
            table.config.samples = std::stol(meta["samples"]);
            table.config.dist = parse_dist_spec(meta["dist"]);
            table.config.master_seed = std::stoull(meta["seed"]);
            if (meta.count("alpha")) table.alpha = strtold(meta["alpha"].c_str(), nullptr);
            table.rows.reserve(table.config.samples);
            continue;
        }
        std::vector<long> fields;
        std::istringstream row(line);
        std::string tok;
        while (std::getline(row, tok, ',')) fields.push_back(std::stol(tok));
        if (static_cast<long>(fields.size()) != table.config.d + 1)
            throw std::runtime_error("read_csv: wrong column count at row " + std::to_string(next_id));
        if (fields[0] != next_id)
            throw std::runtime_error("read_csv: sample_id out of order at row " +
                                     std::to_string(next_id));
        table.rows.emplace_back(fields.begin() + 1, fields.end());
        ++next_id;
    }
    if (!saw_header) throw std::runtime_error("read_csv: no header found");
    if (next_id != table.config.samples)
        throw std::runtime_error("read_csv: row count does not match samples metadata");
    return table;
}

SampleTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv_file: cannot open " + path);
    return read_csv(in);
}

MomentEstimate empirical_normalized_moment(const SampleTable& table, const Partition& lambda) {
    if (!is_partition(lambda)) throw std::invalid_argument("empirical_normalized_moment: not a partition");
    if (static_cast<long>(lambda.size()) > table.config.d)
        throw std::invalid_argument("empirical_normalized_moment: lambda deeper than the table");
    if (table.rows.empty()) throw std::invalid_argument("empirical_normalized_moment: empty table");
    const Real norm = powl(static_cast<Real>(table.config.k), static_cast<Real>(weight(lambda)));
    std::vector<Real> vals;
    vals.reserve(table.rows.size());
    for (const RankVector& row : table.rows) {
        ExactInt h = hom_stat(row, lambda, table.config.p);
        vals.push_back(static_cast<Real>(h.get_d()) / norm);
    }
    return mean_and_error(vals);
}

MomentEstimate empirical_sur_moment(const SampleTable& table, const Partition& lambda) {
    if (!is_partition(lambda)) throw std::invalid_argument("empirical_sur_moment: not a partition");
    if (static_cast<long>(lambda.size()) > table.config.d)
        throw std::invalid_argument("empirical_sur_moment: lambda has more than d parts");
    if (table.rows.empty()) throw std::invalid_argument("empirical_sur_moment: empty table");
    const Partition target = conjugate(lambda);
    std::map<Partition, Real> memo;
    std::vector<Real> vals;
    vals.reserve(table.rows.size());
    for (const RankVector& row : table.rows) {
        Partition type = rank_type(row);
        auto it = memo.find(type);
        if (it == memo.end()) {
            Real v = static_cast<Real>(sur_count(type, target, table.config.p).get_d());
            it = memo.emplace(std::move(type), v).first;
        }
        vals.push_back(it->second);
    }
    return mean_and_error(vals);
}

std::map<Signature, Real> empirical_pmf(const SampleTable& table, long center) {
    if (table.rows.empty()) throw std::invalid_argument("empirical_pmf: empty table");
    std::map<Signature, Real> freq;
    const Real w = 1.0L / table.rows.size();
    for (const RankVector& row : table.rows) {
        Signature key(row.begin(), row.end());
        for (long& v : key) v -= center;
        freq[key] += w;
    }
    return freq;
}

long default_center(long p, long k) {
    if (p < 2 || k < 1) throw std::invalid_argument("default_center: need p >= 2, k >= 1");
    return static_cast<long>(floorl(logl(static_cast<Real>(k)) / logl(static_cast<Real>(p)) + 0.5L));
}

TvBreakdown tv_report(const std::map<Signature, Real>& emp, const LimitLaw& law, long window_lo,
                      long window_hi, Real theory_tol) {
    check_emp(emp, law.d);
    return fold_tv(emp, theory_window(law, window_lo, window_hi, theory_tol));
}

Real tv_distance(const std::map<Signature, Real>& emp, const LimitLaw& law) {
    check_emp(emp, law.d);
    if (law.d == 1) {
        long lo = 0, hi = 1;
        if (!emp.empty()) {
            lo = std::min(lo, emp.begin()->first[0]);
            hi = std::max(hi, emp.rbegin()->first[0]);
        }
        auto_window_d1(law, lo, hi);
        return tv_report(emp, law, lo, hi, 1e-12L).tv_bound;
    }
    return tv_report(emp, law, -3, 3, 1e-3L).tv_bound;
}

ComparisonReport compare_experiment(const SampleTable& table, Real chi, long center) {
    if (chi <= 0) throw std::invalid_argument("compare_experiment: chi must be positive");
    ComparisonReport rep;
    rep.p = table.config.p;
    rep.d = table.config.d;
    rep.n = table.config.n;
    rep.k = table.config.k;
    rep.samples = static_cast<long>(table.rows.size());
    rep.chi = chi;
    rep.center = center;

    LimitLaw law{table.config.d, static_cast<Real>(table.config.p), chi};
    for (const Partition& lam : default_lambdas(rep.d)) {
        MomentEstimate est = empirical_normalized_moment(table, lam);
        rep.moments.push_back({lam, est.estimate, est.std_error, moment_C(law, lam)});
    }

    std::map<Signature, Real> emp = empirical_pmf(table, center);
    long lo = -3, hi = 3;
    Real tol = 1e-3L;
    if (rep.d == 1) {
        lo = std::min(lo, emp.begin()->first[0]);
        hi = std::max(hi, emp.rbegin()->first[0]);
        auto_window_d1(law, lo, hi);
        tol = 1e-12L;
    }
    std::map<Signature, TheoryCell> th = theory_window(law, lo, hi, tol);
    rep.tv = fold_tv(emp, th);
    for (const auto& [nu, cell] : th) {
        auto it = emp.find(nu);
        rep.pmf.push_back({nu, it == emp.end() ? 0 : it->second, cell.value});
    }
    return rep;
}

std::string report_json(const ComparisonReport& rep) {
    using json = nlohmann::ordered_json;
    json j;
    j["config"] = {{"p", rep.p},
                   {"d", rep.d},
                   {"n", rep.n},
                   {"k", rep.k},
                   {"samples", rep.samples},
                   {"chi", static_cast<double>(rep.chi)},
                   {"center", rep.center}};
    j["moments"] = json::array();
    for (const auto& m : rep.moments) {
        j["moments"].push_back({{"lambda", m.lambda},
                                {"empirical", static_cast<double>(m.empirical)},
                                {"std_error", static_cast<double>(m.std_error)},
                                {"theory", static_cast<double>(m.theory)}});
    }
    j["pmf"] = json::array();
    for (const auto& row : rep.pmf) {
        j["pmf"].push_back({{"nu", row.nu},
                            {"empirical", static_cast<double>(row.empirical)},
                            {"theory", static_cast<double>(row.theory)}});
    }
    j["tv"] = {{"tv_bound", static_cast<double>(rep.tv.tv_bound)},
               {"window_l1", static_cast<double>(rep.tv.window_l1)},
               {"emp_outside", static_cast<double>(rep.tv.emp_outside)},
               {"theory_outside", static_cast<double>(rep.tv.theory_outside)},
               {"theory_error", static_cast<double>(rep.tv.theory_error)}};
    return j.dump(2) + "\n";
}

}  // namespace coklab
