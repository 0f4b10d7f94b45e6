#ifndef EULERFACTORY_POLYNOMIAL_HPP
#define EULERFACTORY_POLYNOMIAL_HPP

#include <eulerfactory/util.hpp>

#include <algorithm>
#include <vector>

namespace eulerfactory {

// Minimal dense univariate polynomial, coefficient c[i] for t^i.
template <class C>
struct Poly {
    std::vector<C> c;

    Poly() = default;
    explicit Poly(std::vector<C> v) : c(std::move(v)) { trim(); }
    Poly(std::initializer_list<long> v) {
        c.reserve(v.size());
        for (long x : v) c.emplace_back(x);
        trim();
    }

    void trim() {
        while (!c.empty() && c.back() == 0) c.pop_back();
    }
    bool is_zero() const { return c.empty(); }
    long degree() const { return static_cast<long>(c.size()) - 1; }
    C coeff(size_t i) const { return i < c.size() ? c[i] : C(0); }

    Poly& operator+=(const Poly& o) {
        if (o.c.size() > c.size()) c.resize(o.c.size(), C(0));
        for (size_t i = 0; i < o.c.size(); ++i) c[i] += o.c[i];
        trim();
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        if (o.c.size() > c.size()) c.resize(o.c.size(), C(0));
        for (size_t i = 0; i < o.c.size(); ++i) c[i] -= o.c[i];
        trim();
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly{};
        Poly r;
        r.c.assign(a.c.size() + b.c.size() - 1, C(0));
        for (size_t i = 0; i < a.c.size(); ++i)
            for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
        r.trim();
        return r;
    }
    friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }

    Poly shifted(size_t k) const {  // multiply by t^k
        if (is_zero()) return {};
        Poly r;
        r.c.assign(c.size() + k, C(0));
        std::copy(c.begin(), c.end(), r.c.begin() + static_cast<long>(k));
        return r;
    }

    template <class V>
    V eval(const V& x) const {
        V r(0);
        for (size_t i = c.size(); i-- > 0;) r = r * x + V(c[i]);
        return r;
    }
};

inline mpq_class eval_q(const Poly<mpz_class>& f, const mpq_class& x) {
    mpq_class r = 0;
    for (size_t i = f.c.size(); i-- > 0;) r = r * x + f.c[i];
    return r;
}

inline mpz_class eval_mod(const Poly<mpz_class>& f, const mpz_class& x, const mpz_class& mod) {
    mpz_class r = 0;
    for (size_t i = f.c.size(); i-- > 0;) r = (r * x + f.c[i]) % mod;
    if (r < 0) r += mod;
    return r;
}

// Clears denominators and content; sign chosen so the lowest nonzero coefficient is positive
// when `constant_positive`, otherwise the leading one.
inline Poly<mpz_class> primitive_part(const Poly<mpq_class>& f, bool constant_positive = true) {
    if (f.is_zero()) return {};
    mpz_class lcm = 1;
    for (const auto& q : f.c) {
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), lcm.get_mpz_t(), q.get_den().get_mpz_t());
        lcm = lcm / g * q.get_den();
    }
    Poly<mpz_class> r;
    r.c.reserve(f.c.size());
    for (const auto& q : f.c) r.c.push_back(mpz_class(q.get_num() * (lcm / q.get_den())));
    mpz_class content = 0;
    for (const auto& z : r.c) mpz_gcd(content.get_mpz_t(), content.get_mpz_t(), z.get_mpz_t());
    if (content != 0)
        for (auto& z : r.c) z /= content;
    size_t anchor = 0;
    if (!constant_positive) anchor = r.c.size() - 1;
    while (anchor < r.c.size() && r.c[anchor] == 0) ++anchor;
    if (anchor < r.c.size() && r.c[anchor] < 0)
        for (auto& z : r.c) z = -z;
    r.trim();
    return r;
}

}  // namespace eulerfactory

#endif
