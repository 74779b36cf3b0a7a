#pragma once

#include <functional>
#include <string>
#include <vector>

namespace coklab {

// Integer extended by -inf, with the conventions -inf < a and -inf + a = -inf.
// Kept as a tagged struct so no arithmetic can silently wrap a sentinel.
struct XInt {
    bool finite = true;
    long v = 0;

    XInt() = default;
    XInt(long x) : finite(true), v(x) {}
    static XInt neg_inf() {
        XInt x;
        x.finite = false;
        return x;
    }
    bool is_neg_inf() const { return !finite; }
};

inline bool operator==(XInt a, XInt b) {
    return a.finite == b.finite && (!a.finite || a.v == b.v);
}
inline bool operator<(XInt a, XInt b) {
    if (!a.finite) return b.finite;
    if (!b.finite) return false;
    return a.v < b.v;
}
inline bool operator<=(XInt a, XInt b) { return a < b || a == b; }
inline XInt operator+(XInt a, XInt b) {
    if (!a.finite || !b.finite) return XInt::neg_inf();
    return XInt(a.v + b.v);
}

// Weakly decreasing, nonnegative, trailing zeros stripped.
using Partition = std::vector<long>;
// Weakly decreasing integers, fixed length d.
using Signature = std::vector<long>;
// Weakly decreasing over Z union {-inf}; -inf entries form a suffix.
using XSignature = std::vector<XInt>;

Partition normalize_partition(Partition parts);
bool is_partition(const Partition& p);
bool is_signature(const Signature& s);
bool is_xsignature(const XSignature& s);

long weight(const Partition& p);          // |lambda|
long part_at(const Partition& p, long i); // lambda_i with zero padding, 1-based

Partition conjugate(const Partition& lambda);

XSignature to_xsignature(const Signature& s);
Signature pad_partition(const Partition& p, long d);  // length-d signature

bool dominance_leq(const XSignature& mu, const XSignature& nu);
bool dominance_leq(const Signature& mu, const Signature& nu);

// mu_i <= lambda_i for all i (containment of Young diagrams).
bool contains(const Partition& mu, const Partition& lambda);

// Every mu with mu_i <= lambda_i componentwise, lexicographically descending.
void for_each_subpartition(const Partition& lambda,
                           const std::function<void(const Partition&)>& fn);
std::vector<Partition> subpartitions(const Partition& lambda);

// All beta in Sig_d with beta <= nu (dominance), |nu| - |beta| <= depth and
// nu_d - beta_d <= depth, lexicographically descending.
void for_each_dominated_box(const Signature& nu, long depth,
                            const std::function<void(const Signature&)>& fn);
std::vector<Signature> dominated_box(const Signature& nu, long depth);

// All partitions of weight exactly n (descending lex), and of weight <= n.
std::vector<Partition> partitions_of(long n);
std::vector<Partition> partitions_up_to(long n);

// Textual forms: "5,2,2,1" for partitions/signatures, "0,-1,-inf" extended;
// the empty tuple is "-".
std::string format_partition(const Partition& p);
std::string format_signature(const Signature& s);
std::string format_xsignature(const XSignature& s);
Partition parse_partition(const std::string& text);
Signature parse_signature(const std::string& text);
XSignature parse_xsignature(const std::string& text);

}  // namespace coklab
