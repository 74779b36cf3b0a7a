#include "coklab/cokernel.hpp"

#include "coklab/pgroups.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace coklab {

namespace {

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t mod) {
    return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % mod);
}

uint64_t addmod(uint64_t a, uint64_t b, uint64_t mod) {
    uint64_t s = a + b;  // both < mod < 2^63, no wrap
    return s >= mod ? s - mod : s;
}

uint64_t submod(uint64_t a, uint64_t b, uint64_t mod) { return a >= b ? a - b : a + mod - b; }

// Inverse of u mod m for gcd(u, m) = 1, by extended Euclid over int64.
uint64_t modinv(uint64_t u, uint64_t m) {
    int64_t r0 = static_cast<int64_t>(m), r1 = static_cast<int64_t>(u);
    int64_t t0 = 0, t1 = 1;
    while (r1 != 0) {
        int64_t q = r0 / r1;
        r0 -= q * r1;
        std::swap(r0, r1);
        t0 -= q * t1;
        std::swap(t0, t1);
    }
    if (r0 != 1) throw std::logic_error("modinv: argument not a unit");
    if (t0 < 0) t0 += static_cast<int64_t>(m);
    return static_cast<uint64_t>(t0);
}

long valp(uint64_t x, long p, long L) {
    if (x == 0) return L;
    long v = 0;
    while (x % static_cast<uint64_t>(p) == 0) {
        x /= static_cast<uint64_t>(p);
        ++v;
    }
    return v;
}

ExactRat parse_weight(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("dist spec: empty weight");
    if (s.find('/') != std::string::npos) {
        ExactRat w;
        if (w.set_str(s, 10) != 0) throw std::invalid_argument("dist spec: bad weight '" + s + "'");
        w.canonicalize();
        return w;
    }
    size_t dot = s.find('.');
    std::string digits = s;
    size_t frac_len = 0;
    if (dot != std::string::npos) {
        frac_len = s.size() - dot - 1;
        digits = s.substr(0, dot) + s.substr(dot + 1);
    }
    if (digits.empty() || digits == "-" || digits == "+")
        throw std::invalid_argument("dist spec: bad weight '" + s + "'");
    for (size_t i = (digits[0] == '-' || digits[0] == '+') ? 1 : 0; i < digits.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(digits[i])))
            throw std::invalid_argument("dist spec: bad weight '" + s + "'");
    ExactInt num(digits, 10);
    ExactInt den = 1;
    for (size_t i = 0; i < frac_len; ++i) den *= 10;
    ExactRat w(num, den);
    w.canonicalize();
    return w;
}

}  // namespace

ResidueRing make_ring(long p, long L) {
    if (p < 2 || L < 1) throw std::invalid_argument("make_ring: need p >= 2 and L >= 1");
    for (long f = 2; f * f <= p; ++f)
        if (p % f == 0) throw std::invalid_argument("make_ring: p must be prime");
    unsigned __int128 m = 1;
    for (long i = 0; i < L; ++i) {
        m *= static_cast<unsigned>(p);
        if (m >= (static_cast<unsigned __int128>(1) << 63))
            throw std::invalid_argument("make_ring: p^L does not fit a machine word");
    }
    return ResidueRing{p, L, static_cast<uint64_t>(m)};
}

DistSpec parse_dist_spec(const std::string& text) {
    DistSpec spec;
    if (text == "uniform") {
        spec.kind = DistKind::UniformResidues;
        return spec;
    }
    if (text.rfind("interval:", 0) == 0) {
        spec.kind = DistKind::Interval;
        const std::string body = text.substr(9);
        size_t used = 0;
        spec.b = std::stol(body, &used);
        if (used != body.size() || spec.b < 0)
            throw std::invalid_argument("dist spec: bad interval bound in '" + text + "'");
        return spec;
    }
    if (text.rfind("support:", 0) == 0) {
        spec.kind = DistKind::FiniteSupport;
        std::string body = text.substr(8);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            size_t eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("dist spec: expected v=w in '" + item + "'");
            size_t used = 0;
            long v = std::stol(item.substr(0, eq), &used);
            if (used != eq) throw std::invalid_argument("dist spec: bad value in '" + item + "'");
            spec.values.push_back(v);
            spec.weights.push_back(parse_weight(item.substr(eq + 1)));
        }
        if (spec.values.empty()) throw std::invalid_argument("dist spec: empty support");
        return spec;
    }
    throw std::invalid_argument("dist spec: unrecognized '" + text + "'");
}

std::string format_dist_spec(const DistSpec& spec) {
    switch (spec.kind) {
        case DistKind::UniformResidues:
            return "uniform";
        case DistKind::Interval:
            return "interval:" + std::to_string(spec.b);
        case DistKind::FiniteSupport: {
            std::string out = "support:";
            for (size_t i = 0; i < spec.values.size(); ++i) {
                if (i) out += ',';
                out += std::to_string(spec.values[i]) + "=" + spec.weights[i].get_str();
            }
            return out;
        }
    }
    throw std::logic_error("format_dist_spec: bad kind");
}

EntryDistribution make_distribution(const DistSpec& spec, long p) {
    if (p < 2) throw std::invalid_argument("make_distribution: need p >= 2");
    EntryDistribution dist;
    dist.spec = spec;
    dist.p = p;

    if (spec.kind == DistKind::UniformResidues) {
        // Each residue class mod p carries exactly 1/p of the mass.
        dist.alpha = std::min(static_cast<Real>(0.5L), 1.0L - 1.0L / static_cast<Real>(p));
        dist.denom = 0;
        return dist;
    }

    std::vector<long> values;
    std::vector<ExactRat> weights;
    if (spec.kind == DistKind::Interval) {
        for (long v = -spec.b; v <= spec.b; ++v) {
            values.push_back(v);
            weights.emplace_back(1, 2 * spec.b + 1);
        }
    } else {
        values = spec.values;
        weights = spec.weights;
    }

    ExactRat total = 0;
    for (const auto& w : weights) {
        if (w < 0) throw std::invalid_argument("make_distribution: negative weight");
        total += w;
    }
    if (total != 1) throw std::invalid_argument("make_distribution: weights must sum to 1");

    std::vector<ExactRat> class_mass(p, ExactRat(0));
    for (size_t i = 0; i < values.size(); ++i)
        class_mass[((values[i] % p) + p) % p] += weights[i];
    ExactRat max_mass = *std::max_element(class_mass.begin(), class_mass.end());
    if (max_mass == 1)
        throw DegenerateDistribution("entry distribution is constant mod " + std::to_string(p));
    dist.alpha = std::min(static_cast<Real>(0.5L),
                          1.0L - static_cast<Real>(max_mass.get_d()));

    ExactInt denom = 1;
    for (const auto& w : weights) mpz_lcm(denom.get_mpz_t(), denom.get_mpz_t(),
                                          w.get_den().get_mpz_t());
    if (mpz_sizeinbase(denom.get_mpz_t(), 2) > 63)
        throw std::invalid_argument("make_distribution: weight denominators too large");

    dist.denom = mpz_get_ui(denom.get_mpz_t());
    dist.values = values;
    uint64_t acc = 0;
    for (const auto& w : weights) {
        ExactInt step = w.get_num() * (denom / w.get_den());
        acc += static_cast<uint64_t>(step.get_ui());
        dist.cumulative.push_back(acc);
    }
    return dist;
}

uint64_t draw_entry(const EntryDistribution& dist, const ResidueRing& ring, CounterRng& rng) {
    if (dist.denom == 0) return rng.uniform_below(ring.modulus);
    uint64_t u = rng.uniform_below(dist.denom);
    size_t i = 0;
    while (u >= dist.cumulative[i]) ++i;
    long v = dist.values[i];
    int64_t m = static_cast<int64_t>(ring.modulus);
    return static_cast<uint64_t>(((v % m) + m) % m);
}

MatrixModPL sample_matrix(const EntryDistribution& dist, long n, const ResidueRing& ring,
                          CounterRng& rng) {
    MatrixModPL m;
    m.n = n;
    m.ring = ring;
    m.entries.resize(static_cast<size_t>(n) * n);
    for (auto& e : m.entries) e = draw_entry(dist, ring, rng);
    return m;
}

MatrixModPL multiply(const MatrixModPL& a, const MatrixModPL& b) {
    if (a.n != b.n || a.ring.modulus != b.ring.modulus)
        throw std::invalid_argument("multiply: mismatched matrices");
    const long n = a.n;
    const uint64_t mod = a.ring.modulus;
    MatrixModPL c;
    c.n = n;
    c.ring = a.ring;
    c.entries.assign(static_cast<size_t>(n) * n, 0);
    if ((mod & (mod - 1)) == 0) {
        // Power-of-two modulus: wraparound mod 2^64 is compatible, mask once.
        const uint64_t mask = mod - 1;
        for (long i = 0; i < n; ++i) {
            uint64_t* ci = &c.entries[static_cast<size_t>(i) * n];
            for (long l = 0; l < n; ++l) {
                uint64_t av = a.at(i, l);
                if (av == 0) continue;
                const uint64_t* bl = &b.entries[static_cast<size_t>(l) * n];
                for (long j = 0; j < n; ++j) ci[j] += av * bl[j];
            }
            for (long j = 0; j < n; ++j) ci[j] &= mask;
        }
    } else {
        for (long i = 0; i < n; ++i) {
            uint64_t* ci = &c.entries[static_cast<size_t>(i) * n];
            for (long l = 0; l < n; ++l) {
                uint64_t av = a.at(i, l);
                if (av == 0) continue;
                const uint64_t* bl = &b.entries[static_cast<size_t>(l) * n];
                for (long j = 0; j < n; ++j) ci[j] = addmod(ci[j], mulmod(av, bl[j], mod), mod);
            }
        }
    }
    return c;
}

std::vector<long> smith_valuations(MatrixModPL m) {
    const long n = m.n;
    const long p = m.ring.p;
    const long L = m.ring.L;
    const uint64_t mod = m.ring.modulus;
    std::vector<long> vals;
    vals.reserve(n);

    for (long step = 0; step < n; ++step) {
        long best_v = L;
        long bi = -1, bj = -1;
        for (long i = step; i < n && best_v > 0; ++i)
            for (long j = step; j < n; ++j) {
                long v = valp(m.at(i, j), p, L);
                if (v < best_v) {
                    best_v = v;
                    bi = i;
                    bj = j;
                    if (v == 0) break;
                }
            }
        if (bi < 0) break;  // submatrix is 0 mod p^L

        if (bi != step)
            for (long j = step; j < n; ++j) std::swap(m.at(step, j), m.at(bi, j));
        if (bj != step)
            for (long i = step; i < n; ++i) std::swap(m.at(i, step), m.at(i, bj));

        uint64_t pv = 1;
        for (long t = 0; t < best_v; ++t) pv *= static_cast<uint64_t>(p);
        uint64_t uinv = modinv(m.at(step, step) / pv, mod);
        for (long j = step; j < n; ++j) m.at(step, j) = mulmod(m.at(step, j), uinv, mod);

        for (long i = step + 1; i < n; ++i) {
            uint64_t f = m.at(i, step) / pv;  // exact: pivot valuation is minimal
            if (f == 0) continue;
            for (long j = step; j < n; ++j)
                m.at(i, j) = submod(m.at(i, j), mulmod(f, m.at(step, j), mod), mod);
        }
        // Subtracting column multiples of the pivot column touches only the
        // pivot row now that the rows below are clear.
        for (long j = step + 1; j < n; ++j) m.at(step, j) = 0;

        vals.push_back(best_v);
    }
    vals.resize(n, L);
    std::sort(vals.begin(), vals.end());
    return vals;
}

RankVector rank_vector(const std::vector<long>& vals, long d) {
    RankVector r(d, 0);
    for (long v : vals)
        for (long i = 0; i < d && i < v; ++i) ++r[i];
    return r;
}

MatrixF2 sample_matrix_f2(const EntryDistribution& dist, long n, CounterRng& rng) {
    static const ResidueRing f2 = make_ring(2, 1);
    MatrixF2 m;
    m.n = n;
    m.words = (n + 63) / 64;
    m.rows.assign(static_cast<size_t>(n) * m.words, 0);
    for (long i = 0; i < n; ++i) {
        uint64_t* r = m.row(i);
        for (long j = 0; j < n; ++j)
            r[j >> 6] |= draw_entry(dist, f2, rng) << (j & 63);
    }
    return m;
}

MatrixF2 multiply_f2(const MatrixF2& a, const MatrixF2& b) {
    if (a.n != b.n) throw std::invalid_argument("multiply_f2: mismatched matrices");
    MatrixF2 c;
    c.n = a.n;
    c.words = a.words;
    c.rows.assign(a.rows.size(), 0);
    for (long i = 0; i < a.n; ++i) {
        const uint64_t* ai = a.row(i);
        uint64_t* ci = c.row(i);
        for (long w = 0; w < a.words; ++w) {
            uint64_t word = ai[w];
            while (word) {
                long l = w * 64 + std::countr_zero(word);
                word &= word - 1;
                const uint64_t* bl = b.row(l);
                for (long t = 0; t < a.words; ++t) ci[t] ^= bl[t];
            }
        }
    }
    return c;
}

long rank_f2(MatrixF2 m) {
    long rank = 0;
    for (long col = 0; col < m.n && rank < m.n; ++col) {
        const long w = col >> 6;
        const uint64_t bit = 1ULL << (col & 63);
        long piv = -1;
        for (long i = rank; i < m.n; ++i)
            if (m.row(i)[w] & bit) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        if (piv != rank)
            for (long t = 0; t < m.words; ++t) std::swap(m.row(piv)[t], m.row(rank)[t]);
        const uint64_t* pr = m.row(rank);
        for (long i = rank + 1; i < m.n; ++i) {
            uint64_t* ri = m.row(i);
            if (ri[w] & bit)
                for (long t = w; t < m.words; ++t) ri[t] ^= pr[t];
        }
        ++rank;
    }
    return rank;
}

RankVector sample_cokernel_ranks(const EntryDistribution& dist, long n, long k, long p, long d,
                                 CounterRng& rng) {
    if (k < 1 || d < 1) throw std::invalid_argument("sample_cokernel_ranks: need k, d >= 1");
    if (p == 2 && d == 1) {
        MatrixF2 prod = sample_matrix_f2(dist, n, rng);
        for (long i = 1; i < k; ++i) prod = multiply_f2(prod, sample_matrix_f2(dist, n, rng));
        return {n - rank_f2(std::move(prod))};
    }
    ResidueRing ring = make_ring(p, d);
    MatrixModPL prod = sample_matrix(dist, n, ring, rng);
    for (long i = 1; i < k; ++i) prod = multiply(prod, sample_matrix(dist, n, ring, rng));
    return rank_vector(smith_valuations(std::move(prod)), d);
}

ExactInt hom_stat(const RankVector& r, const Partition& lambda, long p) {
    if (lambda.size() > r.size()) throw std::invalid_argument("hom_stat: lambda deeper than d");
    long e = 0;
    for (size_t i = 0; i < lambda.size(); ++i) e += lambda[i] * r[i];
    return ipow(ExactInt(p), static_cast<unsigned long>(e));
}

Partition cokernel_type(const std::vector<long>& vals, long d) {
    Partition mu;
    for (long v : vals)
        if (v > 0) mu.push_back(std::min(v, d));
    std::sort(mu.begin(), mu.end(), std::greater<>());
    return normalize_partition(std::move(mu));
}

ExactInt sur_stat(const std::vector<long>& vals, long d, const Partition& lambda, long p) {
    Partition lam_conj = conjugate(lambda);
    if (!lam_conj.empty() && lam_conj[0] > d)
        throw std::invalid_argument("sur_stat: target exponent exceeds p^d");
    return sur_count(cokernel_type(vals, d), lam_conj, p);
}

}  // namespace coklab
