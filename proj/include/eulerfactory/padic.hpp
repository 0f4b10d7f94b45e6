#ifndef EULERFACTORY_PADIC_HPP
#define EULERFACTORY_PADIC_HPP

#include <eulerfactory/polynomial.hpp>
#include <eulerfactory/util.hpp>

#include <algorithm>
#include <vector>

namespace eulerfactory {

// Fixed-modulus working context. Residues live in [0, p^W) with W = m + guard.
// m is the target exponent (results must come out correct mod p^m); the guard absorbs
// denominator valuations of intermediates.
struct PadicContext {
    mpz_class p;
    int m;
    int guard;
    int W;
    mpz_class pW;
    std::vector<mpz_class> ppow;  // ppow[k] = p^k, k <= W

    PadicContext(mpz_class p_, int m_, int guard_) : p(std::move(p_)), m(m_), guard(guard_) {
        if (m < 1 || guard < 0) throw input_error("PadicContext requires m >= 1, guard >= 0");
        W = m + guard;
        ppow.resize(static_cast<size_t>(W) + 1);
        ppow[0] = 1;
        for (int k = 1; k <= W; ++k) ppow[static_cast<size_t>(k)] = ppow[static_cast<size_t>(k - 1)] * p;
        pW = ppow[static_cast<size_t>(W)];
    }

    mpz_class reduce(const mpz_class& a) const {
        mpz_class r = a % pW;
        if (r < 0) r += pW;
        return r;
    }
    mpz_class reduce_q(const mpq_class& q) const {
        return reduce(q.get_num() * mod_inv(q.get_den(), pW));
    }
    long val(const mpz_class& a) const { return valuation(a, p, W); }
};

// Truncated power series over Z/p^W with a scale: value = p^{-v} * sum c_n t^n.
// True coefficients are known to absolute precision p^{abs} (i.e. the mantissa c_n is
// meaningful mod p^{v+abs}). Invariant: abs <= W - v. Operations keep `abs` honest;
// engine outputs must end with abs >= m.
struct TruncatedSeries {
    const PadicContext* ctx = nullptr;
    int order = 0;  // coefficients stored for t^n, n < order
    long v = 0;
    long abs = 0;
    std::vector<mpz_class> c;

    TruncatedSeries() = default;
    TruncatedSeries(const PadicContext& cx, int ord) : ctx(&cx), order(ord), v(0), abs(cx.W) {
        c.assign(static_cast<size_t>(std::max(ord, 0)), mpz_class(0));
    }

    static TruncatedSeries constant(const PadicContext& cx, const mpq_class& q, int ord) {
        TruncatedSeries s(cx, ord);
        if (ord > 0) s.c[0] = cx.reduce_q(q);
        return s;
    }

    void clamp() { abs = std::min(abs, static_cast<long>(ctx->W) - v); }

    // True coefficient of t^n as an integer mod p^k; requires abs >= k and p-integrality.
    mpz_class integral_coeff(size_t n, int k) const {
        if (abs < k)
            throw precision_error("series precision exhausted: abs=" + std::to_string(abs) +
                                  " < k=" + std::to_string(k));
        mpz_class mantissa = n < c.size() ? c[n] : mpz_class(0);
        const mpz_class& pk = ctx->ppow[static_cast<size_t>(k)];
        if (v <= 0) {
            mpz_class r = mantissa % pk;
            if (-v > 0) r = (r * ctx->ppow[static_cast<size_t>(std::min<long>(-v, ctx->W))]) % pk;
            return r;
        }
        const mpz_class& window = ctx->ppow[static_cast<size_t>(std::min<long>(v + k, ctx->W))];
        mpz_class r = mantissa % window;
        const mpz_class& pv = ctx->ppow[static_cast<size_t>(v)];
        if (r % pv != 0)
            throw verification_error("series coefficient t^" + std::to_string(n) +
                                     " is not p-integral at the available precision");
        r /= pv;
        r %= pk;
        return r;
    }

    // Raises the scale (representation change; may shed top digits beyond the window).
    void rescale_to(long v_new) {
        if (v_new == v) return;
        long d = v_new - v;
        if (d < 0) {  // lowering the scale requires genuine divisibility; go via normalize-style division
            const mpz_class& f = ctx->ppow[static_cast<size_t>(std::min<long>(-d, ctx->W))];
            for (auto& x : c) {
                if (x % f != 0)
                    throw precision_error("rescale: mantissa not divisible while lowering scale");
                x /= f;
            }
        } else if (d >= ctx->W) {
            for (auto& x : c) x = 0;
        } else {
            const mpz_class& f = ctx->ppow[static_cast<size_t>(d)];
            for (auto& x : c) x = (x * f) % ctx->pW;
        }
        v = v_new;
        clamp();
    }

    // Strips the common p-power of the mantissas (representation change only).
    void normalize() {
        long j = std::min<long>(v + abs, ctx->W);
        for (const auto& x : c) {
            if (j <= 0) return;
            j = std::min(j, ctx->val(x));
        }
        if (j <= 0) return;
        const mpz_class& f = ctx->ppow[static_cast<size_t>(j)];
        for (auto& x : c) x /= f;
        v -= j;
        clamp();
    }

    TruncatedSeries& operator+=(const TruncatedSeries& o) {
        TruncatedSeries tmp;
        const TruncatedSeries* rhs = &o;
        if (o.v != v) {
            if (o.v > v) {
                rescale_to(o.v);
            } else {
                tmp = o;
                tmp.rescale_to(v);
                rhs = &tmp;
            }
        }
        order = std::min(order, rhs->order);
        c.resize(static_cast<size_t>(order));
        abs = std::min(abs, rhs->abs);
        for (size_t i = 0; i < c.size(); ++i) {
            c[i] += rhs->c[i];
            if (c[i] >= ctx->pW) c[i] -= ctx->pW;
        }
        clamp();
        return *this;
    }

    TruncatedSeries& negate() {
        for (auto& x : c)
            if (x != 0) x = ctx->pW - x;
        return *this;
    }

    friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
    friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) {
        TruncatedSeries nb = b;
        nb.negate();
        return a += nb;
    }

    // Effective scale after discounting the common p-power provably present in the
    // mantissas; keeps products from accumulating spurious scale.
    long effective_v() const {
        long j = std::min<long>(v + abs, ctx->W);
        for (const auto& x : c) {
            if (j <= 0) break;
            j = std::min(j, ctx->val(x));
        }
        return v - std::max<long>(j, 0);
    }

    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
        TruncatedSeries r(*a.ctx, std::min(a.order, b.order));
        long va = a.effective_v(), vb = b.effective_v();
        long ja = a.v - va, jb = b.v - vb;  // provable mantissa divisibility
        r.v = va + vb;
        // the shed p-power limits the meaningful mantissa window to W - ja - jb
        r.abs = std::min({a.abs - vb, b.abs - va,
                          static_cast<long>(a.ctx->W) - a.v - b.v});
        for (size_t i = 0; i < a.c.size() && static_cast<int>(i) < r.order; ++i) {
            if (a.c[i] == 0) continue;
            size_t jmax = std::min(b.c.size(), static_cast<size_t>(r.order) - i);
            for (size_t j = 0; j < jmax; ++j) {
                if (b.c[j] == 0) continue;
                r.c[i + j] = (r.c[i + j] + a.c[i] * b.c[j]) % a.ctx->pW;
            }
        }
        if (ja + jb > 0) {
            const mpz_class& f = a.ctx->ppow[static_cast<size_t>(std::min<long>(ja + jb, a.ctx->W))];
            for (auto& x : r.c) x /= f;  // exact: every term carries p^{ja+jb}
        }
        r.clamp();
        return r;
    }

    // multiply the value by p^k (k < 0 divides)
    TruncatedSeries& mul_p_power(long k) {
        v -= k;
        abs += k;
        clamp();
        return *this;
    }

    TruncatedSeries& mul_scalar(const mpz_class& s) {
        mpz_class sr = ctx->reduce(s);
        for (auto& x : c) x = (x * sr) % ctx->pW;
        return *this;
    }

    TruncatedSeries& theta() {  // t d/dt
        for (size_t n = 0; n < c.size(); ++n) c[n] = (c[n] * static_cast<unsigned long>(n)) % ctx->pW;
        return *this;
    }

    TruncatedSeries theta_copy() const {
        TruncatedSeries r = *this;
        r.theta();
        return r;
    }

    // exact reindexing n -> p*n
    TruncatedSeries compose_tp(long p_long, int out_order) const {
        TruncatedSeries r(*ctx, out_order);
        r.v = v;
        r.abs = abs;
        r.clamp();
        for (size_t n = 0; n < c.size(); ++n) {
            size_t np = n * static_cast<size_t>(p_long);
            if (np >= static_cast<size_t>(out_order)) break;
            r.c[np] = c[n];
        }
        return r;
    }

    // Inverse of a unit series (unit constant term after normalization).
    TruncatedSeries invert_unit() const {
        TruncatedSeries a = *this;
        a.normalize();
        if (a.v < 0) a.rescale_to(0);
        if (a.v != 0 || a.c.empty() || a.ctx->val(a.c[0]) != 0)
            throw precision_error("invert: constant term is not a unit");
        TruncatedSeries r(*ctx, a.order);
        r.abs = a.abs;
        mpz_class inv0 = mod_inv(a.c[0], ctx->pW);
        r.c[0] = inv0;
        for (size_t n = 1; n < r.c.size(); ++n) {
            mpz_class s = 0;
            for (size_t k = 1; k <= n && k < a.c.size(); ++k) s += a.c[k] * r.c[n - k];
            s %= ctx->pW;
            r.c[n] = ctx->reduce(-s * inv0);
        }
        r.clamp();
        return r;
    }

    TruncatedSeries truncated(int new_order) const {
        TruncatedSeries r = *this;
        r.order = std::min(r.order, new_order);
        r.c.resize(static_cast<size_t>(r.order));
        return r;
    }
};

inline TruncatedSeries series_from_intpoly(const PadicContext& cx, const Poly<mpz_class>& f, int ord) {
    TruncatedSeries s(cx, ord);
    for (size_t i = 0; i < f.c.size() && i < s.c.size(); ++i) s.c[i] = cx.reduce(f.c[i]);
    return s;
}

// Teichmueller lift: the unique mu with mu^p = mu, mu === a (mod p).
inline mpz_class teichmueller(const mpz_class& a, const PadicContext& cx) {
    mpz_class x = cx.reduce(a);
    if (x % cx.p == 0) throw input_error("teichmueller: argument is not a p-adic unit");
    for (int i = 0; i < 2 * cx.W + 4; ++i) {
        mpz_class nx = mod_pow(x, cx.p, cx.pW);
        if (nx == x) return x;
        x = nx;
    }
    throw precision_error("teichmueller iteration failed to stabilize");
}

inline mpz_class teichmueller(const mpq_class& t0, const PadicContext& cx) {
    if (t0.get_num() % cx.p == 0 || t0.get_den() % cx.p == 0)
        throw input_error("teichmueller: t0 is not a p-adic unit");
    return teichmueller(cx.reduce_q(t0), cx);
}

// Exact Bernoulli numbers B_0..B_n (B_1 = -1/2).
inline std::vector<mpq_class> bernoulli_numbers(int n) {
    std::vector<mpq_class> b(static_cast<size_t>(n) + 1);
    b[0] = 1;
    for (int m = 1; m <= n; ++m) {
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        mpz_class cmj = 1;  // C(m+1, j), starting at j = 0
        mpq_class s = 0;
        for (int j = 0; j < m; ++j) {
            s += mpq_class(cmj) * b[static_cast<size_t>(j)];
            cmj = cmj * (m + 1 - j) / (j + 1);
        }
        b[static_cast<size_t>(m)] = -s / mpq_class(cmj);
    }
    return b;
}

// Kubota-Leopoldt zeta_p(3) = L_p(3, omega^{-2}) mod p^k via the finite-sum formula
//   L_p(s, chi) = 1/(F(s-1)) sum_{a<=F, p not| a} chi(a) <a>^{1-s} sum_j C(1-s,j) (F/a)^j B_j
// at s = 3, where chi(a) <a>^{-2} collapses to a^{-2}. F = p or p^2; the two must agree
// (that agreement is the mandatory self-consistency oracle).
inline mpz_class zeta_p3(const mpz_class& p, int k, int conductor_power = 1) {
    if (p < 5) throw input_error("zeta_p3: unsupported p < 5");
    if (k < 1) throw input_error("zeta_p3: requested exponent must be >= 1");
    if (conductor_power != 1 && conductor_power != 2)
        throw input_error("zeta_p3: F must be p or p^2");
    // term_j = (-1)^j (j+1) B_j F^{j-1} sum_{a unit <= F} a^{-(2+j)};  val >= (j-1)*cp - 1
    int cp = conductor_power;
    int jmax = cp == 1 ? k + 3 : (k + 3) / 2 + 2;
    auto bern = bernoulli_numbers(jmax);
    int K = k + jmax * cp + 4;
    mpz_class pK = pow_ui(p, static_cast<unsigned long>(K));
    mpz_class F = cp == 1 ? p : p * p;
    long acc_e = 0;
    mpz_class acc = 0;
    constexpr long kValCap = 1L << 20;
    for (int j = 0; j <= jmax; ++j) {
        const mpq_class& Bj = bern[static_cast<size_t>(j)];
        if (Bj == 0) continue;
        long vnum = valuation(Bj.get_num(), p, kValCap);
        long vden = valuation(Bj.get_den(), p, kValCap);
        long e = static_cast<long>(j - 1) * cp + vnum - vden;
        mpz_class num = Bj.get_num() / pow_ui(p, static_cast<unsigned long>(vnum));
        mpz_class den = Bj.get_den() / pow_ui(p, static_cast<unsigned long>(vden));
        mpz_class coeff = num * (j + 1) % pK;
        if (coeff < 0) coeff += pK;
        if (j % 2 == 1) coeff = (pK - coeff) % pK;
        coeff = coeff * mod_inv(den, pK) % pK;
        mpz_class asum = 0;
        for (mpz_class a = 1; a < F; ++a) {
            if (a % p == 0) continue;
            asum += mod_inv(mod_pow(a, mpz_class(2 + j), pK), pK);
        }
        asum %= pK;
        mpz_class term = coeff * asum % pK;
        if (term == 0) continue;
        if (e < acc_e) {
            acc = acc * pow_ui(p, static_cast<unsigned long>(acc_e - e)) % pK;
            acc_e = e;
        }
        acc = (acc + term * pow_ui(p, static_cast<unsigned long>(e - acc_e))) % pK;
    }
    // remaining prefactor 1/(s-1) = 1/2
    acc = acc * mod_inv(mpz_class(2), pK) % pK;
    if (acc_e > 0) {
        acc = acc * pow_ui(p, static_cast<unsigned long>(acc_e)) % pK;
    } else if (acc_e < 0) {
        mpz_class pe = pow_ui(p, static_cast<unsigned long>(-acc_e));
        if (acc % pe != 0) throw precision_error("zeta_p3: valuation bookkeeping failed");
        acc /= pe;
    }
    return acc % pow_ui(p, static_cast<unsigned long>(k));
}

}  // namespace eulerfactory

#endif
