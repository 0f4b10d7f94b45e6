#ifndef EULERFACTORY_UTIL_HPP
#define EULERFACTORY_UTIL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eulerfactory {

// Error taxonomy. The CLI maps categories to exit codes.
enum class ErrorClass { input = 2, precision = 3, store = 4, verification = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass c, const std::string& msg) : std::runtime_error(msg), cls(c) {}
    ErrorClass cls;
};

inline Error input_error(const std::string& m) { return Error(ErrorClass::input, m); }
inline Error precision_error(const std::string& m) { return Error(ErrorClass::precision, m); }
inline Error store_error(const std::string& m) { return Error(ErrorClass::store, m); }
inline Error verification_error(const std::string& m) { return Error(ErrorClass::verification, m); }

inline mpz_class pow_ui(const mpz_class& base, unsigned long e) {
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

inline mpz_class mod_inv(const mpz_class& a, const mpz_class& mod) {
    mpz_class r;
    if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
        throw precision_error("not invertible mod " + mod.get_str());
    return r;
}

inline mpz_class mod_pow(const mpz_class& a, const mpz_class& e, const mpz_class& mod) {
    mpz_class r;
    mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
    return r;
}

// p-adic valuation of a nonzero integer; returns cap for a == 0.
inline long valuation(const mpz_class& a, const mpz_class& p, long cap) {
    if (a == 0) return cap;
    mpz_class x = a, q, r;
    long v = 0;
    while (v < cap) {
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
        if (r != 0) break;
        x = q;
        ++v;
    }
    return v;
}

inline long valuation_q(const mpq_class& a, const mpz_class& p) {
    if (a == 0) return 0;
    constexpr long kCap = 1L << 30;
    return valuation(a.get_num(), p, kCap) - valuation(a.get_den(), p, kCap);
}

inline std::vector<long> primes_up_to(long n) {
    std::vector<long> out;
    if (n < 2) return out;
    std::vector<bool> sieve(static_cast<size_t>(n) + 1, true);
    for (long i = 2; i <= n; ++i) {
        if (!sieve[static_cast<size_t>(i)]) continue;
        out.push_back(i);
        for (long j = i * i; j <= n; j += i) sieve[static_cast<size_t>(j)] = false;
    }
    return out;
}

inline bool is_prime(long n) {
    if (n < 2) return false;
    for (long d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// Parses "num", "num/den", or products/powers like "-61^4" and "3805*61".
inline mpz_class parse_int_expr(const std::string& s) {
    size_t i = 0;
    bool negate = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negate = s[i] == '-';
        ++i;
    }
    auto read_factor = [&]() -> mpz_class {
        size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) throw input_error("bad integer expression '" + s + "'");
        mpz_class base(s.substr(i, j - i));
        i = j;
        if (i < s.size() && s[i] == '^') {
            ++i;
            size_t k = i;
            while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
            if (k == i) throw input_error("bad exponent in '" + s + "'");
            unsigned long e = std::stoul(s.substr(i, k - i));
            i = k;
            base = pow_ui(base, e);
        }
        return base;
    };
    mpz_class v = read_factor();
    while (i < s.size() && s[i] == '*') {
        ++i;
        v *= read_factor();
    }
    if (i != s.size()) throw input_error("trailing characters in integer expression '" + s + "'");
    return negate ? mpz_class(-v) : v;
}

inline mpq_class parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return mpq_class(mpz_class(s));
        mpz_class num(s.substr(0, slash)), den(s.substr(slash + 1));
        if (den == 0) throw input_error("zero denominator in '" + s + "'");
        mpq_class q(num, den);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw input_error("malformed rational '" + s + "'");
    }
}

inline std::string rational_to_string(const mpq_class& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

// CRT combine: x === r1 (mod m1), x === r2 (mod m2), gcd(m1,m2)=1.
inline std::pair<mpz_class, mpz_class> crt(const mpz_class& r1, const mpz_class& m1,
                                           const mpz_class& r2, const mpz_class& m2) {
    mpz_class m = m1 * m2;
    mpz_class x = r1 + m1 * (((r2 - r1) * mod_inv(m1, m2)) % m2);
    x %= m;
    if (x < 0) x += m;
    return {x, m};
}

// Rational reconstruction: smallest a/b with a === b*x (mod m), |a|,|b| <= sqrt(m/2).
inline std::optional<mpq_class> rational_reconstruct(const mpz_class& x, const mpz_class& m) {
    mpz_class bound;
    mpz_class half = m / 2;
    mpz_sqrt(bound.get_mpz_t(), half.get_mpz_t());
    mpz_class r0 = m, r1 = x % m, s0 = 0, s1 = 1;
    if (r1 < 0) r1 += m;
    while (r1 > bound) {
        mpz_class q = r0 / r1;
        mpz_class r2 = r0 - q * r1, s2 = s0 - q * s1;
        r0 = r1; r1 = r2; s0 = s1; s1 = s2;
    }
    mpz_class den = s1 < 0 ? mpz_class(-s1) : s1;
    mpz_class num = s1 < 0 ? mpz_class(-r1) : r1;
    if (den == 0 || den > bound) return std::nullopt;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    mpz_class gm;
    mpz_gcd(gm.get_mpz_t(), den.get_mpz_t(), m.get_mpz_t());
    if (gm != 1) return std::nullopt;
    mpq_class q(num, den);
    q.canonicalize();
    return q;
}

}  // namespace eulerfactory

#endif
