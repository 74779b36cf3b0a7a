#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coklab/montecarlo.hpp"
#include "coklab/pgroups.hpp"

#include <cmath>
#include <sstream>

using namespace coklab;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.p = 2;
    cfg.d = 2;
    cfg.n = 6;
    cfg.k = 2;
    cfg.samples = 300;
    cfg.dist = parse_dist_spec("uniform");
    cfg.master_seed = 42;
    return cfg;
}

std::string csv_text(const SampleTable& table) {
    std::ostringstream out;
    write_csv(table, out);
    return out.str();
}

}  // namespace

TEST_CASE("tables are identical for any thread count") {
    ExperimentConfig cfg = small_config();
    cfg.threads = 1;
    std::string serial = csv_text(run_experiment(cfg));
    cfg.threads = 4;
    CHECK(csv_text(run_experiment(cfg)) == serial);
}

TEST_CASE("csv round trips through write and read") {
    SampleTable table = run_experiment(small_config());
    std::istringstream in(csv_text(table));
    SampleTable back = read_csv(in);
    CHECK(back.rows == table.rows);
    CHECK(back.config.p == table.config.p);
    CHECK(back.config.d == table.config.d);
    CHECK(back.config.n == table.config.n);
    CHECK(back.config.k == table.config.k);
    CHECK(back.config.master_seed == table.config.master_seed);
    CHECK(format_dist_spec(back.config.dist) == format_dist_spec(table.config.dist));
    CHECK(back.alpha == doctest::Approx(static_cast<double>(table.alpha)));
}

TEST_CASE("read_csv rejects malformed tables") {
    SampleTable table = run_experiment(small_config());
    std::string text = csv_text(table);

    std::string no_meta = text.substr(text.find("sample_id"));
    std::istringstream in1(no_meta);
    CHECK_THROWS_AS(read_csv(in1), std::runtime_error);

    std::string truncated = text.substr(0, text.rfind("299"));
    std::istringstream in2(truncated);
    CHECK_THROWS_AS(read_csv(in2), std::runtime_error);

    std::string reordered = text;
    size_t pos = reordered.find("\n298,");
    reordered.replace(pos + 1, 3, "777");
    std::istringstream in3(reordered);
    CHECK_THROWS_AS(read_csv(in3), std::runtime_error);
}

TEST_CASE("rank vector rows are weakly decreasing and bounded by n") {
    SampleTable table = run_experiment(small_config());
    for (const RankVector& row : table.rows) {
        REQUIRE(row.size() == 2);
        CHECK(row[0] <= table.config.n);
        CHECK(row[0] >= row[1]);
        CHECK(row[1] >= 0);
    }
}

TEST_CASE("hom moments split over subgroup targets row by row") {
    SampleTable table = run_experiment(small_config());
    Partition lambda{2, 1};
    Partition target = conjugate(lambda);
    long count = 0;
    for (const RankVector& row : table.rows) {
        ExactInt hom = hom_stat(row, lambda, 2);
        ExactInt split = 0;
        for (const Partition& nu : subpartitions(target))
            split += subgroup_count(nu, target, 2) *
                     sur_count(conjugate(normalize_partition(row)), nu, 2);
        CHECK(hom == split);
        if (++count == 50) break;
    }
}

TEST_CASE("sur moment of the trivial shape is exactly one") {
    SampleTable table = run_experiment(small_config());
    MomentEstimate est = empirical_sur_moment(table, {});
    CHECK(est.estimate == doctest::Approx(1));
    CHECK(est.std_error == doctest::Approx(0));
}

TEST_CASE("empirical pmf sums to one and shifts with the center") {
    SampleTable table = run_experiment(small_config());
    std::map<Signature, Real> at0 = empirical_pmf(table, 0);
    Real total = 0;
    for (const auto& [nu, mass] : at0) total += mass;
    CHECK(total == doctest::Approx(1));
    std::map<Signature, Real> at1 = empirical_pmf(table, 1);
    for (const auto& [nu, mass] : at0) {
        Signature shifted{nu[0] - 1, nu[1] - 1};
        CHECK(at1.at(shifted) == doctest::Approx(static_cast<double>(mass)));
    }
}

TEST_CASE("default_center tracks log_p k") {
    CHECK(default_center(2, 1) == 0);
    CHECK(default_center(2, 2) == 1);
    CHECK(default_center(2, 3) == 2);
    CHECK(default_center(2, 4) == 2);
    CHECK(default_center(2, 5) == 2);
    CHECK(default_center(2, 6) == 3);
    CHECK(default_center(2, 8) == 3);
    CHECK(default_center(3, 9) == 2);
    CHECK(default_center(3, 5) == 1);
}

TEST_CASE("sampled moments match the k-step chain counts") {
    ExperimentConfig cfg;
    cfg.p = 2;
    cfg.d = 1;
    cfg.n = 100;
    cfg.k = 4;
    cfg.samples = 2000;
    cfg.dist = parse_dist_spec("uniform");
    cfg.master_seed = 7;
    SampleTable table = run_experiment(cfg);

    MomentEstimate sur1 = empirical_sur_moment(table, {1});
    CHECK(std::fabs(static_cast<double>(sur1.estimate - 4)) <=
          3 * static_cast<double>(sur1.std_error));

    // 2^{r_1} counts all homs to Z/2, so its mean approaches 1 + n_k.
    MomentEstimate norm1 = empirical_normalized_moment(table, {1});
    Real want = (1.0L + 4.0L) / 4;
    CHECK(std::fabs(static_cast<double>(norm1.estimate - want)) <=
          3 * static_cast<double>(norm1.std_error));
}

TEST_CASE("tv_report charges in-window error and out-of-window mass") {
    LimitLaw law{1, 2, 1};
    std::map<Signature, Real> emp;
    for (long x = -8; x <= 12; ++x) emp[{x}] = pmf_d1(x, 2, 1).value;
    TvBreakdown exact = tv_report(emp, law, -8, 12, 1e-10L);
    CHECK(exact.tv_bound < 1e-6L);

    std::map<Signature, Real> far{{{40}, 1.0L}};
    TvBreakdown off = tv_report(far, law, -8, 12, 1e-10L);
    CHECK(off.emp_outside == doctest::Approx(1));
    CHECK(off.tv_bound == doctest::Approx(1));

    TvBreakdown sum = tv_report(emp, law, -4, 6, 1e-10L);
    Real recon = sum.window_l1 / 2 + (sum.emp_outside + sum.theory_outside) / 2 +
                 sum.theory_error;
    CHECK(sum.tv_bound == doctest::Approx(static_cast<double>(std::min<Real>(1, recon))));
}

TEST_CASE("comparison report carries config, moments, pmf, and tv") {
    ExperimentConfig cfg = small_config();
    cfg.d = 1;
    cfg.k = 3;
    cfg.samples = 500;
    SampleTable table = run_experiment(cfg);
    ComparisonReport rep = compare_experiment(table, 1, default_center(2, 3));
    CHECK(rep.p == 2);
    CHECK(rep.d == 1);
    CHECK(rep.k == 3);
    CHECK(rep.center == 2);
    REQUIRE(!rep.moments.empty());
    CHECK(rep.moments[0].lambda == Partition{1});
    CHECK(rep.moments[0].theory == doctest::Approx(1));
    CHECK(rep.tv.tv_bound > 0);
    CHECK(rep.tv.tv_bound <= 1);

    std::string json = report_json(rep);
    CHECK(json.find("\"config\"") != std::string::npos);
    CHECK(json.find("\"moments\"") != std::string::npos);
    CHECK(json.find("\"tv_bound\"") != std::string::npos);
    CHECK(json.back() == '\n');
}

TEST_CASE("run_experiment validates its config") {
    ExperimentConfig cfg = small_config();
    cfg.d = 0;
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.samples = 0;
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.p = 6;
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.dist = parse_dist_spec("support:0=1/2,2=1/2");
    CHECK_THROWS_AS(run_experiment(cfg), DegenerateDistribution);
}
