#ifndef EULERFACTORY_FROBENIUS_HPP
#define EULERFACTORY_FROBENIUS_HPP

#include <eulerfactory/operator.hpp>
#include <eulerfactory/padic.hpp>

#include <array>
#include <vector>

namespace eulerfactory {

// The four power series of the log-Frobenius basis at the MUM point:
//   f0 = A, f1 = A log t + B, f2 = 1/2 A log^2 t + B log t + C,
//   f3 = 1/6 A log^3 t + 1/2 B log^2 t + C log t + D.
struct FrobeniusBasis {
    TruncatedSeries A, B, C, D;
    int order() const { return A.order; }
};

// Solves a_n(rho) = -(rho+n)^{-4} sum_i P_i(rho+n-i) a_{n-i}(rho) in (Z/p^W)[rho]/rho^4,
// where (A_n, B_n, C_n, D_n) are the rho^0..rho^3 components. Incremental in n.
class FrobeniusSolver {
public:
    FrobeniusSolver(const CalabiYauOperator& op, const PadicContext& ctx)
        : op_(&op), ctx_(&ctx), v_(0), abs_(ctx.W) {
        if (op.denominator_lcm() % ctx.p == 0)
            throw input_error("prime divides a coefficient denominator of the operator");
        coeff_.resize(static_cast<size_t>(op.degree_r) + 1);
        for (int i = 0; i <= op.degree_r; ++i)
            for (int j = 0; j <= 4; ++j)
                coeff_[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    ctx.reduce_q(op.coeff[static_cast<size_t>(i)][static_cast<size_t>(j)]);
        for (auto& comp : a_) comp.push_back(mpz_class(0));
        a_[0][0] = 1;  // a_0(rho) = 1
        n_solved_ = 1;
    }

    void extend(int n_max) {
        for (int n = n_solved_; n < n_max; ++n) step(n);
    }

    FrobeniusBasis basis(int order) const {
        if (order > n_solved_) throw input_error("basis: order exceeds solved range");
        FrobeniusBasis b;
        const TruncatedSeries templ = make_series(order);
        b.A = templ;
        b.B = templ;
        b.C = templ;
        b.D = templ;
        for (int n = 0; n < order; ++n) {
            b.A.c[static_cast<size_t>(n)] = a_[0][static_cast<size_t>(n)];
            b.B.c[static_cast<size_t>(n)] = a_[1][static_cast<size_t>(n)];
            b.C.c[static_cast<size_t>(n)] = a_[2][static_cast<size_t>(n)];
            b.D.c[static_cast<size_t>(n)] = a_[3][static_cast<size_t>(n)];
        }
        return b;
    }

    long scale() const { return v_; }
    long abs_precision() const { return abs_; }
    int solved() const { return n_solved_; }

private:
    TruncatedSeries make_series(int order) const {
        TruncatedSeries s(*ctx_, order);
        s.v = v_;
        s.abs = abs_;
        s.clamp();
        return s;
    }

    // rho-components of P_i(rho + nu) mod p^W: out[d] = sum_{j>=d} c_ij C(j,d) nu^{j-d}
    void shifted_rows(int i, long nu, std::array<mpz_class, 4>& out) const {
        static const long binom[5][4] = {
            {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}, {1, 4, 6, 4}};
        mpz_class nupow[5];
        nupow[0] = 1;
        for (int k = 1; k <= 4; ++k) nupow[k] = ctx_->reduce(nupow[k - 1] * nu);
        const auto& row = coeff_[static_cast<size_t>(i)];
        for (int d = 0; d < 4; ++d) {
            mpz_class s = 0;
            for (int j = d; j <= 4; ++j) s += row[static_cast<size_t>(j)] * binom[j][d] * nupow[j - d];
            out[static_cast<size_t>(d)] = ctx_->reduce(s);
        }
    }

    void step(int n) {
        // S(rho) = sum_i P_i(rho+n-i) a_{n-i}(rho)
        std::array<mpz_class, 4> S{mpz_class(0), mpz_class(0), mpz_class(0), mpz_class(0)};
        std::array<mpz_class, 4> P;
        int imax = std::min(n, op_->degree_r);
        if (imax == 0) {  // theta^4 alone: a_n = 0 exactly, nothing to charge
            for (auto& comp : a_) comp.push_back(mpz_class(0));
            ++n_solved_;
            return;
        }
        for (int i = 1; i <= imax; ++i) {
            shifted_rows(i, n - i, P);
            size_t idx = static_cast<size_t>(n - i);
            for (int d = 0; d < 4; ++d) {
                mpz_class s = 0;
                for (int e = 0; e <= d; ++e) s += P[static_cast<size_t>(d - e)] * a_[static_cast<size_t>(e)][idx];
                S[static_cast<size_t>(d)] += s;
            }
        }
        // a_n(rho) = -S(rho) (n^3 - 4 n^2 rho + 10 n rho^2 - 20 rho^3) / n^7
        long s_val = valuation(mpz_class(n), ctx_->p, ctx_->W);
        mpz_class unit = mpz_class(n) / ctx_->ppow[static_cast<size_t>(s_val)];
        mpz_class inv_u7 = mod_inv(mod_pow(unit, mpz_class(7), ctx_->pW), ctx_->pW);
        mpz_class nz = ctx_->reduce(mpz_class(n));
        std::array<mpz_class, 4> num;  // rho-coefficients of n^3 - 4n^2 rho + 10 n rho^2 - 20 rho^3
        num[0] = ctx_->reduce(nz * nz % ctx_->pW * nz);
        num[1] = ctx_->reduce(-4 * nz * nz);
        num[2] = ctx_->reduce(10 * nz);
        num[3] = ctx_->reduce(mpz_class(-20));
        std::array<mpz_class, 4> res;
        for (int d = 0; d < 4; ++d) {
            mpz_class s = 0;
            for (int e = 0; e <= d; ++e) s += S[static_cast<size_t>(e)] * num[static_cast<size_t>(d - e)];
            s %= ctx_->pW;
            res[static_cast<size_t>(d)] = ctx_->reduce(-s * inv_u7);
        }
        if (s_val > 0) {
            // res = p^{v+7 s_val} a_n; strip the divisibility the mantissas actually carry
            // and lift the state only by the genuine denominator deficit.
            long charge = 7 * s_val;
#ifdef EULERFACTORY_BLANKET_CHARGE
            long j = 0;
#else
            long j = charge;
#endif
            for (const auto& r : res) j = std::min(j, ctx_->val(r));
            if (j > 0) {
                const mpz_class& f = ctx_->ppow[static_cast<size_t>(j)];
                for (auto& r : res) r /= f;
            }
            long deficit = charge - j;
            if (deficit > 0) {
                const mpz_class& f = ctx_->ppow[static_cast<size_t>(std::min<long>(deficit, ctx_->W))];
                for (auto& comp : a_)
                    for (auto& x : comp) x = (x * f) % ctx_->pW;
                v_ += deficit;
                abs_ -= deficit;
                if (abs_ < ctx_->m)
                    throw precision_error("frobenius solver: guard digits exhausted at n=" +
                                          std::to_string(n));
            }
        }
        for (int d = 0; d < 4; ++d) a_[static_cast<size_t>(d)].push_back(res[static_cast<size_t>(d)]);
        ++n_solved_;
    }

    const CalabiYauOperator* op_;
    const PadicContext* ctx_;
    std::vector<std::array<mpz_class, 5>> coeff_;
    std::array<std::vector<mpz_class>, 4> a_;
    long v_, abs_;
    int n_solved_ = 0;
};

inline FrobeniusBasis solve_frobenius(const CalabiYauOperator& op, int n_max, const PadicContext& ctx) {
    FrobeniusSolver solver(op, ctx);
    solver.extend(n_max);
    return solver.basis(n_max);
}

// Exact-rational mode: components A,B,C,D as mpq vectors. Retained for tests and small orders.
struct ExactBasis {
    std::array<std::vector<mpq_class>, 4> comp;  // [A, B, C, D]
    int order() const { return static_cast<int>(comp[0].size()); }
};

inline ExactBasis solve_frobenius_exact(const CalabiYauOperator& op, int n_max) {
    ExactBasis b;
    for (auto& v : b.comp) v.reserve(static_cast<size_t>(n_max));
    b.comp[0].push_back(1);
    for (int d = 1; d < 4; ++d) b.comp[static_cast<size_t>(d)].push_back(0);
    static const long binom[5][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}, {1, 4, 6, 4}};
    for (int n = 1; n < n_max; ++n) {
        std::array<mpq_class, 4> S{mpq_class(0), 0, 0, 0};
        int imax = std::min(n, op.degree_r);
        for (int i = 1; i <= imax; ++i) {
            long nu = n - i;
            std::array<mpq_class, 4> P;
            mpq_class nupow[5];
            nupow[0] = 1;
            for (int k = 1; k <= 4; ++k) nupow[k] = nupow[k - 1] * nu;
            for (int d = 0; d < 4; ++d) {
                mpq_class s = 0;
                for (int j = d; j <= 4; ++j)
                    s += op.coeff[static_cast<size_t>(i)][static_cast<size_t>(j)] * binom[j][d] * nupow[j - d];
                P[static_cast<size_t>(d)] = s;
            }
            size_t idx = static_cast<size_t>(n - i);
            for (int d = 0; d < 4; ++d)
                for (int e = 0; e <= d; ++e)
                    S[static_cast<size_t>(d)] += P[static_cast<size_t>(d - e)] * b.comp[static_cast<size_t>(e)][idx];
        }
        mpq_class n2(static_cast<long>(n) * n), n4 = n2 * n2;
        std::array<mpq_class, 4> beta;  // rho-coefficients of (rho+n)^{-4}
        beta[0] = 1 / n4;
        beta[1] = mpq_class(-4) / (n4 * n);
        beta[2] = mpq_class(10) / (n4 * n2);
        beta[3] = mpq_class(-20) / (n4 * n2 * n);
        for (int d = 0; d < 4; ++d) {
            mpq_class s = 0;
            for (int e = 0; e <= d; ++e) s += S[static_cast<size_t>(e)] * beta[static_cast<size_t>(d - e)];
            b.comp[static_cast<size_t>(d)].push_back(-s);
        }
    }
    return b;
}

// 4x4 matrix of truncated series.
struct SeriesMatrix {
    std::array<TruncatedSeries, 16> e;
    TruncatedSeries& at(int i, int j) { return e[static_cast<size_t>(4 * i + j)]; }
    const TruncatedSeries& at(int i, int j) const { return e[static_cast<size_t>(4 * i + j)]; }
};

// E(t) exactly as displayed: rows are built from A,B,C,D and theta-derivatives.
inline SeriesMatrix build_e_matrix(const FrobeniusBasis& b) {
    SeriesMatrix E;
    const TruncatedSeries &A = b.A, &B = b.B, &C = b.C, &D = b.D;
    auto th = [](const TruncatedSeries& s) { return s.theta_copy(); };
    TruncatedSeries tA = th(A), t2A = th(tA), t3A = th(t2A);
    TruncatedSeries tB = th(B), t2B = th(tB), t3B = th(t2B);
    TruncatedSeries tC = th(C), t2C = th(tC), t3C = th(t2C);
    TruncatedSeries tD = th(D), t2D = th(tD), t3D = th(t2D);
    auto scaled = [](TruncatedSeries s, long k) {
        s.mul_scalar(mpz_class(k));
        return s;
    };
    E.at(0, 0) = A;
    E.at(0, 1) = tA;
    E.at(0, 2) = t2A;
    E.at(0, 3) = t3A;
    E.at(1, 0) = B;
    E.at(1, 1) = A + tB;
    E.at(1, 2) = scaled(tA, 2) + t2B;
    E.at(1, 3) = scaled(t2A, 3) + t3B;
    E.at(2, 0) = C;
    E.at(2, 1) = B + tC;
    E.at(2, 2) = A + scaled(tB, 2) + t2C;
    E.at(2, 3) = scaled(tA, 3) + scaled(t2B, 3) + t3C;
    E.at(3, 0) = D;
    E.at(3, 1) = C + tD;
    E.at(3, 2) = B + scaled(tC, 2) + t2D;
    E.at(3, 3) = A + scaled(tB, 3) + scaled(t2C, 3) + t3D;
    return E;
}

inline TruncatedSeries det3(const SeriesMatrix& M, const int r[3], const int c[3]) {
    auto m = [&](int i, int j) { return M.at(r[i], c[j]); };
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline TruncatedSeries det4(const SeriesMatrix& M) {
    TruncatedSeries acc;
    for (int j = 0; j < 4; ++j) {
        int rows[3], cols[3], k = 0;
        for (int r = 1; r < 4; ++r) rows[r - 1] = r;
        for (int cc = 0; cc < 4; ++cc)
            if (cc != j) cols[k++] = cc;
        TruncatedSeries term = M.at(0, j) * det3(M, rows, cols);
        if (j % 2 == 1) term.negate();
        if (j == 0)
            acc = term;
        else
            acc += term;
    }
    return acc;
}

// Inverse via adjugate / det; det must be a unit series.
inline SeriesMatrix invert(const SeriesMatrix& M) {
    TruncatedSeries dinv = det4(M).invert_unit();
    SeriesMatrix R;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            int rows[3], cols[3], a = 0, b = 0;
            for (int r = 0; r < 4; ++r)
                if (r != j) rows[a++] = r;  // transpose: cofactor C_ji
            for (int cc = 0; cc < 4; ++cc)
                if (cc != i) cols[b++] = cc;
            TruncatedSeries cof = det3(M, rows, cols);
            if ((i + j) % 2 == 1) cof.negate();
            R.at(i, j) = cof * dinv;
        }
    }
    return R;
}

// Applies the operator to f_j represented by log-components (g_0..g_3 with g_l the
// coefficient of log^l t / l!), in exact arithmetic. Independent oracle for the solver:
// all outputs must vanish up to order n_max - degree_r.
inline std::array<std::vector<mpq_class>, 4> apply_operator_log(const CalabiYauOperator& op,
                                                                const std::array<std::vector<mpq_class>, 4>& g) {
    size_t n = g[0].size();
    auto theta_vec = [&](const std::array<std::vector<mpq_class>, 4>& h) {
        std::array<std::vector<mpq_class>, 4> r;
        for (int l = 0; l < 4; ++l) {
            r[static_cast<size_t>(l)].assign(n, 0);
            for (size_t k = 0; k < n; ++k) {
                r[static_cast<size_t>(l)][k] = h[static_cast<size_t>(l)][k] * static_cast<long>(k);
                if (l < 3) r[static_cast<size_t>(l)][k] += h[static_cast<size_t>(l) + 1][k];
            }
        }
        return r;
    };
    std::array<std::array<std::vector<mpq_class>, 4>, 5> thetas;
    thetas[0] = g;
    for (int k = 1; k <= 4; ++k) thetas[static_cast<size_t>(k)] = theta_vec(thetas[static_cast<size_t>(k - 1)]);
    std::array<std::vector<mpq_class>, 4> out;
    for (auto& v : out) v.assign(n, 0);
    for (int i = 0; i <= op.degree_r; ++i)
        for (int j = 0; j <= 4; ++j) {
            const mpq_class& cij = op.coeff[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (cij == 0) continue;
            for (int l = 0; l < 4; ++l)
                for (size_t k = 0; k + static_cast<size_t>(i) < n; ++k)
                    out[static_cast<size_t>(l)][k + static_cast<size_t>(i)] +=
                        cij * thetas[static_cast<size_t>(j)][static_cast<size_t>(l)][k];
        }
    return out;
}

// f_j has log-components (g_0,...,g_3) = (S_j, S_{j-1}, ..., S_0, 0, ...) with S = (A,B,C,D).
inline std::array<std::vector<mpq_class>, 4> log_components_of_f(const ExactBasis& b, int j) {
    std::array<std::vector<mpq_class>, 4> g;
    size_t n = b.comp[0].size();
    for (int l = 0; l < 4; ++l) {
        if (l <= j)
            g[static_cast<size_t>(l)] = b.comp[static_cast<size_t>(j - l)];
        else
            g[static_cast<size_t>(l)].assign(n, 0);
    }
    return g;
}

}  // namespace eulerfactory

#endif
