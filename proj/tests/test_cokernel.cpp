#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coklab/cokernel.hpp"
#include "coklab/pgroups.hpp"

#include <cmath>
#include <map>

using namespace coklab;

namespace {

MatrixModPL matrix_from(long n, const ResidueRing& ring, const std::vector<long>& vals) {
    MatrixModPL m;
    m.n = n;
    m.ring = ring;
    m.entries.resize(static_cast<size_t>(n) * n);
    for (size_t i = 0; i < m.entries.size(); ++i) {
        long v = vals[i] % static_cast<long>(ring.modulus);
        if (v < 0) v += static_cast<long>(ring.modulus);
        m.entries[i] = static_cast<uint64_t>(v);
    }
    return m;
}

// Row/column operations with unit pivots preserve the Smith form.
MatrixModPL add_row_multiple(MatrixModPL m, long dst, long src, uint64_t c) {
    for (long j = 0; j < m.n; ++j)
        m.at(dst, j) = (m.at(dst, j) + c * m.at(src, j)) % m.ring.modulus;
    return m;
}

}  // namespace

TEST_CASE("make_ring validates and rejects overflow") {
    ResidueRing r = make_ring(3, 4);
    CHECK(r.modulus == 81);
    CHECK(make_ring(2, 20).modulus == (1ULL << 20));
    CHECK_THROWS_AS(make_ring(2, 64), std::invalid_argument);
    CHECK_THROWS_AS(make_ring(4, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_ring(2, 0), std::invalid_argument);
}

TEST_CASE("distribution grammar round trips") {
    for (const char* text : {"uniform", "interval:3", "support:0=1/2,1=1/4,3=1/4"}) {
        DistSpec spec = parse_dist_spec(text);
        CHECK(format_dist_spec(spec) == text);
    }
    CHECK_THROWS_AS(parse_dist_spec("interval:x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_dist_spec("support:"), std::invalid_argument);
    CHECK_THROWS_AS(parse_dist_spec("gaussian"), std::invalid_argument);
}

TEST_CASE("make_distribution rejects bad weightings") {
    CHECK_THROWS_AS(make_distribution(parse_dist_spec("support:0=1/2,1=1/4"), 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_distribution(parse_dist_spec("support:0=1/2,2=1/2"), 2),
                    DegenerateDistribution);
    CHECK_THROWS_AS(make_distribution(parse_dist_spec("support:1=1"), 3), DegenerateDistribution);
}

TEST_CASE("alpha is the balancedness of the mod-p reduction") {
    EntryDistribution u = make_distribution(parse_dist_spec("uniform"), 5);
    CHECK(u.alpha == doctest::Approx(0.5));
    EntryDistribution d = make_distribution(parse_dist_spec("support:0=3/4,1=1/4"), 2);
    CHECK(d.alpha == doctest::Approx(0.25));
    EntryDistribution i = make_distribution(parse_dist_spec("interval:1"), 3);
    CHECK(i.alpha == doctest::Approx(0.5));
}

TEST_CASE("draw_entry follows the support weights") {
    EntryDistribution dist = make_distribution(parse_dist_spec("support:0=1/2,1=1/4,3=1/4"), 2);
    ResidueRing ring = make_ring(2, 3);
    CounterRng rng(17);
    const long trials = 100000;
    std::map<uint64_t, long> hist;
    for (long t = 0; t < trials; ++t) ++hist[draw_entry(dist, ring, rng)];
    CHECK(hist.size() == 3);
    struct Want {
        uint64_t value;
        double prob;
    };
    for (const Want& w : {Want{0, 0.5}, Want{1, 0.25}, Want{3, 0.25}}) {
        double freq = static_cast<double>(hist[w.value]) / trials;
        double sigma = std::sqrt(w.prob * (1 - w.prob) / trials);
        CHECK(std::fabs(freq - w.prob) < 3 * sigma);
    }
}

TEST_CASE("interval support reduces correctly") {
    EntryDistribution dist = make_distribution(parse_dist_spec("interval:2"), 3);
    ResidueRing ring = make_ring(3, 2);
    CounterRng rng(4);
    std::map<uint64_t, long> hist;
    for (long t = 0; t < 30000; ++t) ++hist[draw_entry(dist, ring, rng)];
    // [-2, 2] mod 9: residues 7, 8, 0, 1, 2 each with mass 1/5.
    CHECK(hist.size() == 5);
    for (uint64_t v : {7ULL, 8ULL, 0ULL, 1ULL, 2ULL}) CHECK(hist[v] > 0);
}

TEST_CASE("smith valuations on pinned matrices") {
    ResidueRing ring = make_ring(2, 3);
    CHECK(smith_valuations(matrix_from(3, ring, {1, 0, 0, 0, 2, 0, 0, 0, 4})) ==
          std::vector<long>{0, 1, 2});
    CHECK(smith_valuations(matrix_from(2, ring, {0, 0, 0, 0})) == std::vector<long>{3, 3});
    CHECK(smith_valuations(matrix_from(3, ring, {2, 4, 0, 4, 2, 2, 0, 2, 1})) ==
          std::vector<long>{0, 1, 1});
    ResidueRing r3 = make_ring(3, 2);
    CHECK(smith_valuations(matrix_from(2, r3, {3, 0, 0, 5})) == std::vector<long>{0, 1});
}

TEST_CASE("smith valuations are invariant under unimodular row operations") {
    ResidueRing ring = make_ring(3, 3);
    CounterRng rng(99);
    EntryDistribution dist = make_distribution(parse_dist_spec("uniform"), 3);
    for (int rep = 0; rep < 50; ++rep) {
        MatrixModPL m = sample_matrix(dist, 4, ring, rng);
        std::vector<long> base = smith_valuations(m);
        MatrixModPL twisted = add_row_multiple(m, 2, 0, 5);
        twisted = add_row_multiple(twisted, 0, 3, 11);
        CHECK(smith_valuations(twisted) == base);
    }
}

TEST_CASE("rank_vector counts valuations at each level") {
    CHECK(rank_vector({0, 1, 1, 3}, 3) == RankVector{3, 1, 1});
    CHECK(rank_vector({0, 0}, 1) == RankVector{0});
    CHECK(rank_vector({2, 2}, 2) == RankVector{2, 2});
    CHECK(rank_vector({}, 2) == RankVector{0, 0});
}

TEST_CASE("cokernel_type truncates valuations at the window depth") {
    CHECK(cokernel_type({0, 1, 3, 2}, 2) == Partition{2, 2, 1});
    CHECK(cokernel_type({0, 0, 0}, 4) == Partition{});
    CHECK(cokernel_type({1, 5}, 3) == Partition{3, 1});
    // The type and the rank vector are conjugate shapes.
    std::vector<long> vals{0, 1, 1, 4, 2};
    CHECK(conjugate(cokernel_type(vals, 3)) == normalize_partition(rank_vector(vals, 3)));
}

TEST_CASE("packed and general paths agree over Z/2") {
    EntryDistribution dist = make_distribution(parse_dist_spec("uniform"), 2);
    for (uint64_t seed : {1ULL, 2ULL, 77ULL, 1234567ULL}) {
        CounterRng a(seed), b(seed);
        RankVector packed = sample_cokernel_ranks(dist, 20, 3, 2, 1, a);
        ResidueRing ring = make_ring(2, 1);
        MatrixModPL prod = sample_matrix(dist, 20, ring, b);
        for (long i = 1; i < 3; ++i) prod = multiply(prod, sample_matrix(dist, 20, ring, b));
        CHECK(packed == rank_vector(smith_valuations(prod), 1));
    }
}

TEST_CASE("matrix product ranks are monotone in the factor count") {
    EntryDistribution dist = make_distribution(parse_dist_spec("uniform"), 2);
    CounterRng rng(5);
    ResidueRing ring = make_ring(2, 2);
    MatrixModPL prod = sample_matrix(dist, 12, ring, rng);
    RankVector prev = rank_vector(smith_valuations(prod), 2);
    for (int step = 0; step < 4; ++step) {
        prod = multiply(prod, sample_matrix(dist, 12, ring, rng));
        RankVector cur = rank_vector(smith_valuations(prod), 2);
        for (size_t i = 0; i < cur.size(); ++i) CHECK(cur[i] >= prev[i]);
        prev = cur;
    }
}

TEST_CASE("hom_stat matches the hom count of the truncated cokernel") {
    std::vector<long> vals{0, 0, 1, 2, 5};
    long d = 3;
    RankVector r = rank_vector(vals, d);
    for (const Partition& lam : {Partition{1}, Partition{2, 1}, Partition{3, 1, 1}}) {
        ExactInt direct = hom_count(cokernel_type(vals, d), conjugate(lam), 2);
        CHECK(hom_stat(r, lam, 2) == direct);
    }
}

TEST_CASE("sur_stat is consistent with the type-level surjection count") {
    std::vector<long> vals{0, 1, 1, 3};
    for (long d : {1L, 2L, 3L}) {
        Partition type = cokernel_type(vals, d);
        for (const Partition& lam : {Partition{1}, Partition{1, 1}, Partition{2}}) {
            if (static_cast<long>(lam.size()) > d) continue;
            CHECK(sur_stat(vals, d, lam, 2) == sur_count(type, conjugate(lam), 2));
        }
    }
}

TEST_CASE("multiply reduces entries into the ring") {
    ResidueRing ring = make_ring(2, 3);
    MatrixModPL a = matrix_from(2, ring, {7, 7, 7, 7});
    MatrixModPL b = matrix_from(2, ring, {7, 0, 0, 7});
    MatrixModPL c = multiply(a, b);
    for (uint64_t e : c.entries) CHECK(e < ring.modulus);
    CHECK(c.at(0, 0) == (7 * 7) % 8);
}
