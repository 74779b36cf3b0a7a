#include "coklab/signatures.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coklab {

Partition normalize_partition(Partition parts) {
    while (!parts.empty() && parts.back() == 0) parts.pop_back();
    if (!is_partition(parts))
        throw std::invalid_argument("normalize_partition: not weakly decreasing nonnegative");
    return parts;
}

bool is_partition(const Partition& p) {
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0) return false;
        if (i + 1 < p.size() && p[i] < p[i + 1]) return false;
    }
    return true;
}

bool is_signature(const Signature& s) {
    for (size_t i = 0; i + 1 < s.size(); ++i)
        if (s[i] < s[i + 1]) return false;
    return true;
}

bool is_xsignature(const XSignature& s) {
    for (size_t i = 0; i + 1 < s.size(); ++i)
        if (s[i] < s[i + 1]) return false;
    return true;
}

long weight(const Partition& p) { return std::accumulate(p.begin(), p.end(), 0L); }

long part_at(const Partition& p, long i) {
    return (i >= 1 && (size_t)i <= p.size()) ? p[i - 1] : 0;
}

Partition conjugate(const Partition& lambda) {
    Partition out;
    if (lambda.empty()) return out;
    out.resize(lambda[0]);
    for (long i = 1; i <= lambda[0]; ++i)
        out[i - 1] = std::count_if(lambda.begin(), lambda.end(),
                                   [i](long part) { return part >= i; });
    return out;
}

XSignature to_xsignature(const Signature& s) {
    XSignature out;
    out.reserve(s.size());
    for (long v : s) out.emplace_back(v);
    return out;
}

Signature pad_partition(const Partition& p, long d) {
    if ((long)p.size() > d)
        throw std::invalid_argument("pad_partition: partition longer than d");
    Signature s(p.begin(), p.end());
    s.resize(d, 0);
    return s;
}

bool dominance_leq(const XSignature& mu, const XSignature& nu) {
    if (mu.size() != nu.size())
        throw std::invalid_argument("dominance_leq: length mismatch");
    XInt pm(0), pn(0);
    for (size_t i = 0; i < mu.size(); ++i) {
        pm = pm + mu[i];
        pn = pn + nu[i];
        if (!(pm <= pn)) return false;
    }
    return true;
}

bool dominance_leq(const Signature& mu, const Signature& nu) {
    if (mu.size() != nu.size())
        throw std::invalid_argument("dominance_leq: length mismatch");
    long pm = 0, pn = 0;
    for (size_t i = 0; i < mu.size(); ++i) {
        pm += mu[i];
        pn += nu[i];
        if (pm > pn) return false;
    }
    return true;
}

bool contains(const Partition& mu, const Partition& lambda) {
    if (mu.size() > lambda.size()) return false;
    for (size_t i = 0; i < mu.size(); ++i)
        if (mu[i] > lambda[i]) return false;
    return true;
}

namespace {

void subpartition_rec(const Partition& lambda, size_t i, long prev, Partition& cur,
                      const std::function<void(const Partition&)>& fn) {
    if (i == lambda.size()) {
        fn(normalize_partition(cur));
        return;
    }
    long hi = std::min(prev, lambda[i]);
    for (long v = hi; v >= 0; --v) {
        cur.push_back(v);
        subpartition_rec(lambda, i + 1, v, cur, fn);
        cur.pop_back();
    }
}

}  // namespace

void for_each_subpartition(const Partition& lambda,
                           const std::function<void(const Partition&)>& fn) {
    Partition cur;
    subpartition_rec(lambda, 0, lambda.empty() ? 0 : lambda[0], cur, fn);
}

std::vector<Partition> subpartitions(const Partition& lambda) {
    std::vector<Partition> out;
    for_each_subpartition(lambda, [&](const Partition& mu) { out.push_back(mu); });
    return out;
}

namespace {

long ceil_div(long a, long b) {  // b > 0
    return (a >= 0) ? (a + b - 1) / b : -((-a) / b);
}

void box_rec(const Signature& nu, long depth, size_t i, long prev, long prefix_beta,
             long prefix_nu, Signature& cur,
             const std::function<void(const Signature&)>& fn) {
    const long d = (long)nu.size();
    const long total_nu = prefix_nu + std::accumulate(nu.begin() + i, nu.end(), 0L);
    if ((long)i == d) {
        fn(cur);
        return;
    }
    long remaining = d - (long)i;
    // Dominance prefix constraint and weak decrease cap from above; the weight
    // floor |beta| >= |nu| - depth caps from below via the remaining entries.
    long hi = std::min(prev, prefix_nu + nu[i] - prefix_beta);
    long lo = ceil_div(total_nu - depth - prefix_beta, remaining);
    if ((long)i == d - 1) {
        // last entry: also nu_d - beta_d <= depth
        lo = std::max(lo, nu[i] - depth);
    }
    for (long v = hi; v >= lo; --v) {
        cur.push_back(v);
        box_rec(nu, depth, i + 1, v, prefix_beta + v, prefix_nu + nu[i], cur, fn);
        cur.pop_back();
    }
}

}  // namespace

void for_each_dominated_box(const Signature& nu, long depth,
                            const std::function<void(const Signature&)>& fn) {
    if (!is_signature(nu))
        throw std::invalid_argument("dominated_box: nu is not weakly decreasing");
    if (depth < 0) throw std::invalid_argument("dominated_box: depth must be >= 0");
    if (nu.empty()) return;
    Signature cur;
    box_rec(nu, depth, 0, std::numeric_limits<long>::max(), 0, 0, cur, fn);
}

std::vector<Signature> dominated_box(const Signature& nu, long depth) {
    std::vector<Signature> out;
    for_each_dominated_box(nu, depth, [&](const Signature& b) { out.push_back(b); });
    return out;
}

namespace {

void partitions_rec(long n, long cap, Partition& cur, std::vector<Partition>& out) {
    if (n == 0) {
        out.push_back(cur);
        return;
    }
    for (long v = std::min(cap, n); v >= 1; --v) {
        cur.push_back(v);
        partitions_rec(n - v, v, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<Partition> partitions_of(long n) {
    std::vector<Partition> out;
    if (n < 0) return out;
    Partition cur;
    partitions_rec(n, n, cur, out);
    return out;
}

std::vector<Partition> partitions_up_to(long n) {
    std::vector<Partition> out;
    for (long m = 0; m <= n; ++m) {
        auto pm = partitions_of(m);
        out.insert(out.end(), pm.begin(), pm.end());
    }
    return out;
}

std::string format_partition(const Partition& p) {
    if (p.empty()) return "-";
    std::ostringstream os;
    for (size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
    return os.str();
}

std::string format_signature(const Signature& s) { return format_partition(s); }

std::string format_xsignature(const XSignature& s) {
    if (s.empty()) return "-";
    std::ostringstream os;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        if (s[i].is_neg_inf())
            os << "-inf";
        else
            os << s[i].v;
    }
    return os.str();
}

namespace {

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace((unsigned char)c)) {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

XSignature parse_xsignature(const std::string& text) {
    XSignature out;
    if (text == "-" || text.empty()) return out;
    for (const auto& tok : split_commas(text)) {
        if (tok == "-inf") {
            out.push_back(XInt::neg_inf());
        } else {
            size_t pos = 0;
            long v = std::stol(tok, &pos);
            if (pos != tok.size())
                throw std::invalid_argument("parse: bad entry '" + tok + "'");
            out.emplace_back(v);
        }
    }
    if (!is_xsignature(out))
        throw std::invalid_argument("parse: entries not weakly decreasing");
    return out;
}

Signature parse_signature(const std::string& text) {
    XSignature x = parse_xsignature(text);
    Signature out;
    for (XInt v : x) {
        if (v.is_neg_inf())
            throw std::invalid_argument("parse: -inf not allowed in a signature");
        out.push_back(v.v);
    }
    return out;
}

Partition parse_partition(const std::string& text) {
    return normalize_partition(parse_signature(text));
}

}  // namespace coklab
