#pragma once

#include "coklab/exact.hpp"
#include "coklab/pgroups.hpp"
#include "coklab/signatures.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace coklab {

// Element-level enumeration oracles. Everything here works on explicit
// element tables and subgroup bit sets; no counting formulas are used, so
// these results can gate the formula-based module independently.

struct SubgroupCensus {
    std::map<Partition, ExactInt> by_type;
    ExactInt total;  // = n_2(G)
};

// Enumerate every subgroup of G by closing generator sets level by level
// (each new subgroup is <K, g> for K one order-p step below), classify each
// by its order histogram. Default cap keeps |G| at desk scale.
SubgroupCensus brute_force_subgroups(const AbelianPGroup& G, long cap = 512);

// n_3(G) = sum over subgroups H of (number of subgroups of H), aggregated
// from censuses only (each distinct subgroup type is itself enumerated).
ExactInt brute_force_chain3(const AbelianPGroup& G, long cap = 512);

// Materialized subgroup lattice for small groups (|G| <= 64): each subgroup
// as an element bit mask, with its type.
struct SmallLattice {
    AbelianPGroup G;
    long order;                        // |G|
    std::vector<uint64_t> masks;       // one bit per element
    std::vector<Partition> types;
};
SmallLattice brute_force_lattice(const AbelianPGroup& G);

// Chains 0 = H_0 <= ... <= H_k = G counted by nested containment scans of
// the materialized lattice.
ExactInt brute_force_chain_count(const AbelianPGroup& G, long k);

// Maximal-length chains (each step of index p) counted the same way.
ExactInt brute_force_max_chain_count(const AbelianPGroup& G);

// #Sur(G_mu, G_lambda) for |G_lambda| <= 64: images of the generators of
// G_mu are enumerated one at a time; the state is the subgroup generated so
// far, looked up in the materialized lattice of G_lambda.
ExactInt brute_force_sur_count(const Partition& mu, const Partition& lambda, long p);

// Same count by literally iterating every generator-image tuple; only for
// tiny instances (tuple count <= limit). Cross-checks the DP above.
ExactInt brute_force_sur_count_literal(const Partition& mu, const Partition& lambda,
                                       long p, unsigned long long limit = 20000000ULL);

}  // namespace coklab
