#include "coklab/brute_force.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace coklab {

namespace {

// Explicit element arithmetic for G_lambda: elements are mixed-radix indices
// over the cyclic factors, with full addition/order tables.
struct ElemTable {
    long p = 2;
    Partition lambda;
    long n = 1;                    // |G|
    std::vector<uint16_t> add;     // add[x*n + y] = x + y
    std::vector<uint16_t> mulp;    // p*x
    std::vector<uint8_t> ordexp;   // least j with p^j x = 0
};

ElemTable build_elem_table(const AbelianPGroup& G, long cap) {
    if (cap > 4096) cap = 4096;  // add table is n^2 and indices are uint16
    ElemTable t;
    t.p = G.p;
    t.lambda = normalize_partition(G.type);
    std::vector<long> moduli;
    long n = 1;
    for (long part : t.lambda) {
        long m = 1;
        for (long j = 0; j < part; ++j) {
            m *= G.p;
            if (m > cap) throw std::invalid_argument("brute force: |G| exceeds cap");
        }
        moduli.push_back(m);
        n *= m;
        if (n > cap) throw std::invalid_argument("brute force: |G| exceeds cap");
    }
    t.n = n;
    size_t ell = moduli.size();
    std::vector<long> cx(ell), cy(ell);
    t.add.assign((size_t)n * n, 0);
    for (long x = 0; x < n; ++x) {
        long r = x;
        for (size_t i = 0; i < ell; ++i) {
            cx[i] = r % moduli[i];
            r /= moduli[i];
        }
        for (long y = 0; y < n; ++y) {
            long s = y, z = 0, stride = 1;
            for (size_t i = 0; i < ell; ++i) {
                long ci = (cx[i] + s % moduli[i]) % moduli[i];
                z += ci * stride;
                stride *= moduli[i];
                s /= moduli[i];
            }
            t.add[(size_t)x * n + y] = (uint16_t)z;
        }
    }
    t.mulp.assign(n, 0);
    for (long x = 0; x < n; ++x) {
        long z = 0;
        for (long j = 0; j < G.p; ++j) z = t.add[(size_t)z * n + x];
        t.mulp[x] = (uint16_t)z;
    }
    t.ordexp.assign(n, 0);
    for (long x = 0; x < n; ++x) {
        long y = x;
        uint8_t e = 0;
        while (y != 0) {
            y = t.mulp[y];
            ++e;
        }
        t.ordexp[x] = e;
    }
    return t;
}

Partition type_from_members(const ElemTable& t, const uint64_t* bits, int W) {
    // |H[p^j]| = p^{mu'_1 + ... + mu'_j}; recover mu' from the histogram of
    // order exponents, then conjugate.
    long lmax = t.lambda.empty() ? 0 : t.lambda[0];
    std::vector<long> cnt(lmax + 1, 0);
    for (int w = 0; w < W; ++w) {
        uint64_t word = bits[w];
        while (word) {
            int b = std::countr_zero(word);
            word &= word - 1;
            cnt[t.ordexp[(size_t)w * 64 + b]]++;
        }
    }
    auto log_p = [&](long v) {
        long e = 0;
        while (v > 1) {
            v /= t.p;
            ++e;
        }
        return e;
    };
    Partition mu_conj;
    long cum = cnt[0], prev_log = log_p(cum);
    for (long j = 1; j <= lmax; ++j) {
        cum += cnt[j];
        long cur_log = log_p(cum);
        long col = cur_log - prev_log;
        prev_log = cur_log;
        if (col > 0) mu_conj.push_back(col);
    }
    return conjugate(normalize_partition(mu_conj));
}

struct LevelHash {
    // open-addressing set over subgroups stored in an external arena
    std::vector<uint32_t> slots;  // index+1 into arena, 0 = empty
    size_t mask = 0;
    size_t count = 0;

    void init(size_t capacity_pow2) {
        slots.assign(capacity_pow2, 0);
        mask = capacity_pow2 - 1;
        count = 0;
    }
    static uint64_t hash_words(const uint64_t* w, int W) {
        uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (int i = 0; i < W; ++i) {
            h ^= w[i];
            h *= 0xbf58476d1ce4e5b9ULL;
            h ^= h >> 29;
        }
        return h;
    }
};

}  // namespace

SubgroupCensus brute_force_subgroups(const AbelianPGroup& G, long cap) {
    ElemTable t = build_elem_table(G, cap);
    const long n = t.n;
    const int W = (int)((n + 63) / 64);
    const long p = t.p;

    std::map<Partition, unsigned long long> census;
    std::vector<uint64_t> cur((size_t)W, 0);
    cur[0] = 1;  // the trivial subgroup {0}
    size_t cur_count = 1;
    census[Partition{}] = 1;

    std::vector<uint64_t> covered(W), H(W);
    while (cur_count > 0) {
        std::vector<uint64_t> next;
        LevelHash table;
        table.init(1024);
        auto grow_if_needed = [&]() {
            if (table.count * 10 < table.slots.size() * 6) return;
            LevelHash bigger;
            bigger.init(table.slots.size() * 4);
            for (uint32_t s : table.slots) {
                if (!s) continue;
                const uint64_t* w = &next[(size_t)(s - 1) * W];
                size_t pos = LevelHash::hash_words(w, W) & bigger.mask;
                while (bigger.slots[pos]) pos = (pos + 1) & bigger.mask;
                bigger.slots[pos] = s;
            }
            bigger.count = table.count;
            table = std::move(bigger);
        };

        for (size_t ki = 0; ki < cur_count; ++ki) {
            const uint64_t* K = &cur[ki * W];
            std::memcpy(covered.data(), K, (size_t)W * 8);
            for (long g = 1; g < n; ++g) {
                if (covered[g >> 6] & (1ULL << (g & 63))) continue;
                long pg = t.mulp[g];
                if (!(K[pg >> 6] & (1ULL << (pg & 63)))) continue;
                // H = K + <g>: the p-1 nontrivial translates of K by g
                std::memcpy(H.data(), K, (size_t)W * 8);
                long tr = 0;
                for (long j = 1; j < p; ++j) {
                    tr = t.add[(size_t)tr * n + g];
                    for (int w = 0; w < W; ++w) {
                        uint64_t word = K[w];
                        while (word) {
                            int b = std::countr_zero(word);
                            word &= word - 1;
                            long e = t.add[((size_t)w * 64 + b) * n + tr];
                            H[e >> 6] |= 1ULL << (e & 63);
                        }
                    }
                }
                for (int w = 0; w < W; ++w) covered[w] |= H[w];

                uint64_t h = LevelHash::hash_words(H.data(), W);
                size_t pos = h & table.mask;
                bool found = false;
                while (table.slots[pos]) {
                    const uint64_t* w = &next[(size_t)(table.slots[pos] - 1) * W];
                    if (std::memcmp(w, H.data(), (size_t)W * 8) == 0) {
                        found = true;
                        break;
                    }
                    pos = (pos + 1) & table.mask;
                }
                if (!found) {
                    next.insert(next.end(), H.begin(), H.end());
                    table.slots[pos] = (uint32_t)(next.size() / W);
                    table.count++;
                    grow_if_needed();
                    census[type_from_members(t, H.data(), W)]++;
                }
            }
        }
        cur = std::move(next);
        cur_count = cur.size() / W;
    }

    SubgroupCensus out;
    out.total = 0;
    for (const auto& [type, c] : census) {
        out.by_type[type] = ExactInt((unsigned long)c);
        out.total += ExactInt((unsigned long)c);
    }
    return out;
}

namespace {

std::mutex g_census_mutex;

std::map<std::pair<long, Partition>, SubgroupCensus>& census_memo() {
    static std::map<std::pair<long, Partition>, SubgroupCensus> m;
    return m;
}

const SubgroupCensus& census_cached(const AbelianPGroup& G, long cap) {
    Partition lam = normalize_partition(G.type);
    std::lock_guard<std::mutex> lock(g_census_mutex);
    auto key = std::make_pair(G.p, lam);
    auto it = census_memo().find(key);
    if (it != census_memo().end()) return it->second;
    SubgroupCensus census = brute_force_subgroups({G.p, lam}, cap);
    return census_memo().emplace(key, std::move(census)).first->second;
}

}  // namespace

ExactInt brute_force_chain3(const AbelianPGroup& G, long cap) {
    const SubgroupCensus& top = census_cached(G, cap);
    ExactInt total = 0;
    for (const auto& [type, count] : top.by_type)
        total += count * census_cached({G.p, type}, cap).total;
    return total;
}

SmallLattice brute_force_lattice(const AbelianPGroup& G) {
    ElemTable t = build_elem_table(G, 64);
    const long n = t.n;
    SmallLattice lat;
    lat.G = {G.p, normalize_partition(G.type)};
    lat.order = n;

    std::vector<uint64_t> cur = {1ULL};  // trivial subgroup
    lat.masks.push_back(1ULL);
    while (!cur.empty()) {
        std::vector<uint64_t> next;
        for (uint64_t K : cur) {
            uint64_t covered = K;
            for (long g = 1; g < n; ++g) {
                if (covered & (1ULL << g)) continue;
                if (!(K & (1ULL << t.mulp[g]))) continue;
                uint64_t H = K;
                long tr = 0;
                for (long j = 1; j < t.p; ++j) {
                    tr = t.add[(size_t)tr * n + g];
                    uint64_t word = K;
                    while (word) {
                        int b = std::countr_zero(word);
                        word &= word - 1;
                        H |= 1ULL << t.add[(size_t)b * n + tr];
                    }
                }
                covered |= H;
                if (std::find(next.begin(), next.end(), H) == next.end())
                    next.push_back(H);
            }
        }
        std::sort(next.begin(), next.end());
        lat.masks.insert(lat.masks.end(), next.begin(), next.end());
        cur = std::move(next);
    }
    std::sort(lat.masks.begin(), lat.masks.end(), [](uint64_t a, uint64_t b) {
        int pa = std::popcount(a), pb = std::popcount(b);
        return pa != pb ? pa < pb : a < b;
    });
    for (uint64_t m : lat.masks) lat.types.push_back(type_from_members(t, &m, 1));
    return lat;
}

ExactInt brute_force_chain_count(const AbelianPGroup& G, long k) {
    SmallLattice lat = brute_force_lattice(G);
    size_t S = lat.masks.size();
    uint64_t full = (lat.order == 64) ? ~0ULL : ((1ULL << lat.order) - 1);
    std::vector<ExactInt> cur(S, 0);
    for (size_t i = 0; i < S; ++i)
        if (lat.masks[i] == 1ULL) cur[i] = 1;
    for (long step = 0; step < k; ++step) {
        std::vector<ExactInt> next(S, 0);
        for (size_t a = 0; a < S; ++a)
            for (size_t b = 0; b < S; ++b)
                if ((lat.masks[b] & ~lat.masks[a]) == 0) next[a] += cur[b];
        cur.swap(next);
    }
    for (size_t i = 0; i < S; ++i)
        if (lat.masks[i] == full) return cur[i];
    throw std::logic_error("brute_force_chain_count: full group missing");
}

ExactInt brute_force_max_chain_count(const AbelianPGroup& G) {
    SmallLattice lat = brute_force_lattice(G);
    size_t S = lat.masks.size();
    uint64_t full = (lat.order == 64) ? ~0ULL : ((1ULL << lat.order) - 1);
    std::vector<ExactInt> ways(S, 0);
    for (size_t i = 0; i < S; ++i)
        if (lat.masks[i] == 1ULL) ways[i] = 1;
    for (size_t a = 0; a < S; ++a) {
        int pa = std::popcount(lat.masks[a]);
        for (size_t b = 0; b < a; ++b) {
            if (std::popcount(lat.masks[b]) * G.p != pa) continue;
            if ((lat.masks[b] & ~lat.masks[a]) == 0) ways[a] += ways[b];
        }
    }
    for (size_t i = 0; i < S; ++i)
        if (lat.masks[i] == full) return ways[i];
    throw std::logic_error("brute_force_max_chain_count: full group missing");
}

namespace {

uint64_t join_closure(const ElemTable& t, uint64_t S, long x) {
    if (S & (1ULL << x)) return S;
    uint64_t m = S;
    std::vector<long> stack = {x};
    while (!stack.empty()) {
        long v = stack.back();
        stack.pop_back();
        if (m & (1ULL << v)) continue;
        m |= 1ULL << v;
        uint64_t word = m;
        while (word) {
            int b = std::countr_zero(word);
            word &= word - 1;
            long s = t.add[(size_t)b * t.n + v];
            if (!(m & (1ULL << s))) stack.push_back(s);
        }
    }
    return m;
}

}  // namespace

ExactInt brute_force_sur_count(const Partition& mu, const Partition& lambda, long p) {
    AbelianPGroup Gl{p, normalize_partition(lambda)};
    ElemTable t = build_elem_table(Gl, 64);
    SmallLattice lat = brute_force_lattice(Gl);
    size_t S = lat.masks.size();
    std::unordered_map<uint64_t, size_t> index;
    for (size_t i = 0; i < S; ++i) index[lat.masks[i]] = i;
    uint64_t full = (lat.order == 64) ? ~0ULL : ((1ULL << lat.order) - 1);

    long lmax = Gl.type.empty() ? 0 : Gl.type[0];
    // elems_by_bound[j]: elements killed by p^j
    std::vector<std::vector<long>> elems(lmax + 1);
    for (long j = 0; j <= lmax; ++j)
        for (long x = 0; x < t.n; ++x)
            if (t.ordexp[x] <= j) elems[j].push_back(x);

    // join table, built lazily per (state, element)
    std::vector<std::vector<int>> join_idx(S, std::vector<int>(t.n, -1));
    auto join = [&](size_t si, long x) {
        int& slot = join_idx[si][x];
        if (slot < 0) slot = (int)index.at(join_closure(t, lat.masks[si], x));
        return (size_t)slot;
    };

    std::vector<ExactInt> cur(S, 0);
    cur[index.at(1ULL)] = 1;
    Partition m = normalize_partition(mu);
    for (long mi : m) {
        std::vector<ExactInt> next(S, 0);
        const auto& xs = elems[std::min(mi, lmax)];
        for (size_t si = 0; si < S; ++si) {
            if (cur[si] == 0) continue;
            for (long x : xs) next[join(si, x)] += cur[si];
        }
        cur.swap(next);
    }
    return cur[index.at(full)];
}

ExactInt brute_force_sur_count_literal(const Partition& mu, const Partition& lambda,
                                       long p, unsigned long long limit) {
    AbelianPGroup Gl{p, normalize_partition(lambda)};
    ElemTable t = build_elem_table(Gl, 64);
    uint64_t full = (t.n == 64) ? ~0ULL : ((1ULL << t.n) - 1);
    Partition m = normalize_partition(mu);
    long lmax = Gl.type.empty() ? 0 : Gl.type[0];

    std::vector<std::vector<long>> choices;
    unsigned long long tuples = 1;
    for (long mi : m) {
        std::vector<long> xs;
        for (long x = 0; x < t.n; ++x)
            if (t.ordexp[x] <= std::min(mi, lmax)) xs.push_back(x);
        tuples *= xs.size();
        if (tuples > limit)
            throw std::length_error("brute_force_sur_count_literal: too many tuples");
        choices.push_back(std::move(xs));
    }

    ExactInt count = 0;
    std::vector<size_t> idx(choices.size(), 0);
    while (true) {
        uint64_t gen = 1ULL;
        for (size_t i = 0; i < choices.size(); ++i)
            gen = join_closure(t, gen, choices[i][idx[i]]);
        if (gen == full) count += 1;
        size_t pos = 0;
        while (pos < idx.size() && ++idx[pos] == choices[pos].size()) {
            idx[pos] = 0;
            ++pos;
        }
        if (pos == idx.size()) break;
    }
    return count;
}

}  // namespace coklab
