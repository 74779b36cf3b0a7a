#include "coklab/pgroups.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace coklab {

namespace {

std::mutex g_memo_mutex;

struct PairKey {
    long p;
    Partition a, b;
    bool operator<(const PairKey& o) const {
        return std::tie(p, a, b) < std::tie(o.p, o.a, o.b);
    }
};

std::map<PairKey, ExactInt>& sur_memo() {
    static std::map<PairKey, ExactInt> m;
    return m;
}

struct GroupKey {
    long p;
    Partition lambda;
    bool operator<(const GroupKey& o) const {
        return std::tie(p, lambda) < std::tie(o.p, o.lambda);
    }
};

std::map<GroupKey, ExactInt>& nmax_memo() {
    static std::map<GroupKey, ExactInt> m;
    return m;
}

ExactInt sur_count_locked(const Partition& mu, const Partition& lambda, long p);

}  // namespace

ExactInt subgroup_count(const Partition& mu, const Partition& lambda, long p) {
    if (!contains(mu, lambda)) return 0;
    Partition mc = conjugate(mu), lc = conjugate(lambda);
    ExactInt pz(p), total(1);
    long rows = lambda.empty() ? 0 : lambda[0];
    for (long i = 1; i <= rows; ++i) {
        long lci = part_at(lc, i);
        long mci = part_at(mc, i);
        long mci1 = part_at(mc, i + 1);
        total *= ipow(pz, (unsigned long)(mci1 * (lci - mci)));
        total *= gaussian_binomial_exact(lci - mci1, mci - mci1, pz);
    }
    return total;
}

ExactInt hom_count(const Partition& mu, const Partition& lambda, long p) {
    Partition mc = conjugate(mu), lc = conjugate(lambda);
    long e = 0;
    for (size_t i = 0; i < std::min(mc.size(), lc.size()); ++i) e += mc[i] * lc[i];
    return ipow(ExactInt(p), (unsigned long)e);
}

namespace {

ExactInt sur_count_locked(const Partition& mu, const Partition& lambda, long p) {
    // Surjections G_mu -> G_lambda exist only if the target fits in the
    // source rank- and exponent-wise; outside that the recursion returns 0.
    PairKey key{p, mu, lambda};
    auto it = sur_memo().find(key);
    if (it != sur_memo().end()) return it->second;
    ExactInt v = hom_count(mu, lambda, p);
    for_each_subpartition(lambda, [&](const Partition& nu) {
        if (nu == lambda) return;
        ExactInt c = subgroup_count(nu, lambda, p);
        if (c != 0) v -= c * sur_count_locked(mu, nu, p);
    });
    sur_memo().emplace(key, v);
    return v;
}

}  // namespace

ExactInt sur_count(const Partition& mu, const Partition& lambda, long p) {
    std::lock_guard<std::mutex> lock(g_memo_mutex);
    return sur_count_locked(mu, lambda, p);
}

ExactInt chain_count(const AbelianPGroup& G, long k) {
    if (k < 0) throw std::invalid_argument("chain_count: k must be >= 0");
    Partition lambda = normalize_partition(G.type);
    auto lattice = subpartitions(lambda);
    size_t S = lattice.size();
    std::map<Partition, size_t> index;
    for (size_t i = 0; i < S; ++i) index[lattice[i]] = i;

    // counts[a][b] = subgroup_count(lattice[b], lattice[a])
    std::vector<std::vector<std::pair<size_t, ExactInt>>> edges(S);
    for (size_t a = 0; a < S; ++a)
        for_each_subpartition(lattice[a], [&](const Partition& mu) {
            ExactInt c = subgroup_count(mu, lattice[a], G.p);
            if (c != 0) edges[a].emplace_back(index.at(mu), c);
        });

    std::vector<ExactInt> cur(S, 0);
    cur[index.at(Partition{})] = 1;  // n_0
    for (long step = 0; step < k; ++step) {
        std::vector<ExactInt> next(S, 0);
        for (size_t a = 0; a < S; ++a)
            for (const auto& [b, c] : edges[a]) next[a] += c * cur[b];
        cur.swap(next);
    }
    return cur[index.at(lambda)];
}

ExactInt max_chain_count(const AbelianPGroup& G) {
    Partition lambda = normalize_partition(G.type);
    GroupKey key{G.p, lambda};
    {
        std::lock_guard<std::mutex> lock(g_memo_mutex);
        auto it = nmax_memo().find(key);
        if (it != nmax_memo().end()) return it->second;
    }
    ExactInt v;
    if (lambda.empty()) {
        v = 1;
    } else {
        v = 0;
        long target = weight(lambda) - 1;
        for_each_subpartition(lambda, [&](const Partition& mu) {
            if (weight(mu) != target) return;
            v += subgroup_count(mu, lambda, G.p) * max_chain_count({G.p, mu});
        });
    }
    std::lock_guard<std::mutex> lock(g_memo_mutex);
    nmax_memo().emplace(key, v);
    return v;
}

Real nk_ratio(const AbelianPGroup& G, long k) {
    Partition lambda = normalize_partition(G.type);
    if (k < weight(lambda)) throw std::invalid_argument("nk_ratio: k < |lambda|");
    ExactInt nk = chain_count(G, k);
    ExactInt denom = binomial_exact((unsigned long)k, (unsigned long)weight(lambda));
    ExactRat r(nk, denom);
    r.canonicalize();
    return (Real)r.get_d();
}

}  // namespace coklab
