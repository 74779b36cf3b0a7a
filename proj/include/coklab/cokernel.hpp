#pragma once

#include "coklab/exact.hpp"
#include "coklab/rng.hpp"
#include "coklab/signatures.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace coklab {

// Entry law whose reduction mod p is constant; such matrices never mix.
struct DegenerateDistribution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Z/p^L with machine-word residues. Constructed through make_ring, which
// rejects composite p and moduli that do not fit a word.
struct ResidueRing {
    long p = 2;
    long L = 1;
    uint64_t modulus = 2;  // p^L
};

ResidueRing make_ring(long p, long L);

enum class DistKind { UniformResidues, Interval, FiniteSupport };

// Parsed form of the CLI grammar: uniform | interval:b | support:v1=w1,...
struct DistSpec {
    DistKind kind = DistKind::UniformResidues;
    long b = 0;                    // interval: uniform on [-b, b]
    std::vector<long> values;      // finite support
    std::vector<ExactRat> weights; // exact, sum to 1
};

DistSpec parse_dist_spec(const std::string& text);
std::string format_dist_spec(const DistSpec& spec);

// Entry sampler plus the balancedness parameter alpha = min(1/2, 1 - max
// residue probability mod p). The support table is pre-reduced to integer
// thresholds over a common denominator so draws are exact.
struct EntryDistribution {
    DistSpec spec;
    long p = 2;
    Real alpha = 0;
    uint64_t denom = 0;                // 0: uniform over the whole ring
    std::vector<long> values;          // support values (interval expanded)
    std::vector<uint64_t> cumulative;  // thresholds; last entry == denom
};

EntryDistribution make_distribution(const DistSpec& spec, long p);

struct MatrixModPL {
    long n = 0;
    ResidueRing ring;
    std::vector<uint64_t> entries;  // row-major, reduced mod p^L

    uint64_t& at(long i, long j) { return entries[static_cast<size_t>(i) * n + j]; }
    uint64_t at(long i, long j) const { return entries[static_cast<size_t>(i) * n + j]; }
};

uint64_t draw_entry(const EntryDistribution& dist, const ResidueRing& ring, CounterRng& rng);
MatrixModPL sample_matrix(const EntryDistribution& dist, long n, const ResidueRing& ring,
                          CounterRng& rng);
MatrixModPL multiply(const MatrixModPL& a, const MatrixModPL& b);

// Sorted valuations (v_1 <= ... <= v_n) of the Smith form diagonal, with
// v(0) = L. Pivot: minimal p-valuation, first in row-major order on ties.
std::vector<long> smith_valuations(MatrixModPL m);

// r_i = #{j : v_j >= i}, i = 1..d.
using RankVector = std::vector<long>;
RankVector rank_vector(const std::vector<long>& vals, long d);

// Bit-packed F_2 matrices for the p=2, L=1 hot path.
struct MatrixF2 {
    long n = 0;
    long words = 0;
    std::vector<uint64_t> rows;  // n rows of `words` words each

    uint64_t* row(long i) { return rows.data() + static_cast<size_t>(i) * words; }
    const uint64_t* row(long i) const { return rows.data() + static_cast<size_t>(i) * words; }
};

// Consumes the stream exactly like sample_matrix over Z/2, so the packed and
// general paths see identical matrices for a given substream.
MatrixF2 sample_matrix_f2(const EntryDistribution& dist, long n, CounterRng& rng);
MatrixF2 multiply_f2(const MatrixF2& a, const MatrixF2& b);
long rank_f2(MatrixF2 m);

// k iid matrices over Z/p^d multiplied left to right; rank vector of the
// product's cokernel. Dispatches to the packed path when p=2, d=1.
RankVector sample_cokernel_ranks(const EntryDistribution& dist, long n, long k, long p, long d,
                                 CounterRng& rng);

// p^{sum_i lambda_i r_i}.
ExactInt hom_stat(const RankVector& r, const Partition& lambda, long p);

// Cokernel type mod p^d: parts min(v_j, d), zeros dropped, sorted.
Partition cokernel_type(const std::vector<long>& vals, long d);

// #Sur(cokernel mod p^d, G_{lambda'}).
ExactInt sur_stat(const std::vector<long>& vals, long d, const Partition& lambda, long p);

}  // namespace coklab
