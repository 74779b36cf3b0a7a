#pragma once

#include "coklab/exact.hpp"
#include "coklab/signatures.hpp"

namespace coklab {

// G_lambda = direct sum of Z/p^{lambda_i}.
struct AbelianPGroup {
    long p;
    Partition type;
};

// Number of subgroups of G_lambda isomorphic to G_mu (0 unless mu fits in
// lambda componentwise). Butler's product formula over the conjugates; gated
// exactly against the brute-force enumeration oracle in the test suite.
ExactInt subgroup_count(const Partition& mu, const Partition& lambda, long p);

// #Hom(G_mu, G_lambda) = p^{sum_i mu'_i lambda'_i}.
ExactInt hom_count(const Partition& mu, const Partition& lambda, long p);

// #Sur(G_mu, G_lambda) via the triangular recursion
// #Sur(mu, lambda) = #Hom(mu, lambda) - sum_{nu strictly inside lambda}
//                    subgroup_count(nu, lambda) #Sur(mu, nu).
ExactInt sur_count(const Partition& mu, const Partition& lambda, long p);

// n_k(G): chains 0 = H_0 <= H_1 <= ... <= H_k = G.
ExactInt chain_count(const AbelianPGroup& G, long k);

// n_max(G): chains of maximal length |lambda| with one-step index p.
ExactInt max_chain_count(const AbelianPGroup& G);

// chain_count(G, k) / binomial(k, |lambda|); approaches max_chain_count.
Real nk_ratio(const AbelianPGroup& G, long k);

}  // namespace coklab
