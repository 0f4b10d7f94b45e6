#ifndef EULERFACTORY_UMATRIX_HPP
#define EULERFACTORY_UMATRIX_HPP

#include <eulerfactory/frobenius.hpp>
#include <eulerfactory/operator.hpp>
#include <eulerfactory/padic.hpp>

#include <array>
#include <optional>
#include <tuple>
#include <vector>

namespace eulerfactory {

// Limit matrix U_p(0) = diag(1, p, p^2, p^3) + p^3 x_p e_{41}. Only the class of x_p
// mod p^{m-3} matters downstream; the calibration may pin more digits when the
// congruences demand them.
struct ULimitMatrix {
    mpz_class p;
    int m = 4;
    mpz_class x;        // residue mod p^x_digits
    long x_digits = 0;  // digits of x actually determined
};

struct UMatrixSeries {
    SeriesMatrix u;
    int order = 0;
    mpz_class x_used;
};

// Denominator-cleared form: U = sum_i p^i V_i(t) / Delta(t)^{p delta_i} (mod p^m).
// V_i are integer polynomial matrices with coefficients lifted to [0, p).
struct RationalUMatrix {
    mpz_class p;
    int m = 4;
    std::vector<int> delta;
    std::vector<int> degree;
    std::vector<std::array<Poly<mpz_class>, 16>> V;
};

namespace detail {

// U(x) = U0 + x*K with K = p^3 (Einv(t^p) col 4)(row 1 of E(t)); rank one in x.
struct USeriesParts {
    SeriesMatrix U0;
    SeriesMatrix K;
    int order = 0;
};

inline USeriesParts u_series_parts(const CalabiYauOperator& op, const PadicContext& ctx, int n_max) {
    long p_long = ctx.p.get_si();
    FrobeniusSolver solver(op, ctx);
    solver.extend(n_max);
    FrobeniusBasis basis = solver.basis(n_max);
    SeriesMatrix E = build_e_matrix(basis);
    int n_inv = static_cast<int>((n_max - 1) / p_long) + 1;
    SeriesMatrix Eshort;
    for (int i = 0; i < 16; ++i) Eshort.e[static_cast<size_t>(i)] = E.e[static_cast<size_t>(i)].truncated(n_inv);
    SeriesMatrix Einv = invert(Eshort);
    SeriesMatrix Einv_tp;
    for (int i = 0; i < 16; ++i)
        Einv_tp.e[static_cast<size_t>(i)] = Einv.e[static_cast<size_t>(i)].compose_tp(p_long, n_max);

    USeriesParts parts;
    parts.order = n_max;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            TruncatedSeries acc;
            for (int k = 0; k < 4; ++k) {
                TruncatedSeries term = Einv_tp.at(i, k) * E.at(k, j);
                term.mul_p_power(k);
                if (k == 0)
                    acc = term;
                else
                    acc += term;
            }
            parts.U0.at(i, j) = acc;
        }
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            TruncatedSeries term = Einv_tp.at(i, 3) * E.at(0, j);
            term.mul_p_power(3);
            parts.K.at(i, j) = term;
        }
    }
    return parts;
}

// Linear congruences u + x*k === 0 (mod p^digits) on mantissas at a common scale.
struct CongruenceAccumulator {
    const PadicContext* ctx;
    mpz_class x0 = 0;
    long digits = 0;
    bool contradictory = false;

    explicit CongruenceAccumulator(const PadicContext& cx) : ctx(&cx) {}

    void add(const mpz_class& u, const mpz_class& k, long mod_digits) {
        if (contradictory || mod_digits <= 0) return;
        mod_digits = std::min<long>(mod_digits, ctx->W);
        long dk = valuation(k, ctx->p, mod_digits);
        mpz_class pm = ctx->ppow[static_cast<size_t>(mod_digits)];
        if (dk >= mod_digits) {
            if (u % pm != 0) contradictory = true;
            return;
        }
        mpz_class pd = ctx->ppow[static_cast<size_t>(dk)];
        if (u % pd != 0) {
            contradictory = true;
            return;
        }
        long j = mod_digits - dk;
        mpz_class pj = ctx->ppow[static_cast<size_t>(j)];
        mpz_class rhs = ((-(u / pd)) % pj + pj) % pj;
        mpz_class xr = rhs * mod_inv((k / pd) % pj, pj) % pj;
        if (j <= digits) {
            if ((x0 - xr) % pj != 0) contradictory = true;
            return;
        }
        if (digits > 0 && (x0 - xr) % ctx->ppow[static_cast<size_t>(digits)] != 0) {
            contradictory = true;
            return;
        }
        x0 = xr;
        digits = j;
    }
};

}  // namespace detail

inline SeriesMatrix u_series_at(const detail::USeriesParts& parts, const mpz_class& x) {
    SeriesMatrix U;
    for (int i = 0; i < 16; ++i) {
        TruncatedSeries kx = parts.K.e[static_cast<size_t>(i)];
        kx.mul_scalar(x);
        U.e[static_cast<size_t>(i)] = parts.U0.e[static_cast<size_t>(i)] + kx;
    }
    return U;
}

// U_p(t) = E(t^p)^{-1} U_p(0) E(t) at a given x_p, to the given truncation order.
inline UMatrixSeries compute_u_series(const CalabiYauOperator& op, const PadicContext& ctx,
                                      const mpz_class& x, int n_max) {
    detail::USeriesParts parts = detail::u_series_parts(op, ctx, n_max);
    UMatrixSeries out;
    out.u = u_series_at(parts, x);
    out.order = n_max;
    out.x_used = x;
    return out;
}

struct CalibrationResult {
    mpz_class x;
    long x_digits;
    UMatrixSeries series;
};

// Integrality calibration: solves the linear congruences forcing every coefficient of
// U_p(t) to be p-integral, verifies over the full order. (Digits of x invisible to the
// integrality condition are refined later by the rationality of the deeper layers.)
inline CalibrationResult calibrate_x(const CalabiYauOperator& op, const PadicContext& ctx, int n_max) {
    detail::USeriesParts parts = detail::u_series_parts(op, ctx, n_max);
    detail::CongruenceAccumulator acc(ctx);
    for (int e = 0; e < 16; ++e) {
        TruncatedSeries u = parts.U0.e[static_cast<size_t>(e)];
        TruncatedSeries k = parts.K.e[static_cast<size_t>(e)];
        long cv = std::max(u.v, k.v);
        u.rescale_to(cv);
        k.rescale_to(cv);
        long mod_digits = std::min({cv, cv + u.abs, cv + k.abs});
        for (size_t n = 0; n < u.c.size(); ++n)
            acc.add(u.c[n], n < k.c.size() ? k.c[n] : mpz_class(0), mod_digits);
    }
    if (acc.contradictory)
        throw verification_error("calibrate_x: no admissible x (operator outside method scope?)");
    CalibrationResult res;
    res.x = acc.x0;
    res.x_digits = acc.digits;
    res.series.u = u_series_at(parts, acc.x0);
    res.series.order = parts.order;
    res.series.x_used = acc.x0;
    for (int e = 0; e < 16; ++e) {
        TruncatedSeries& s = res.series.u.e[static_cast<size_t>(e)];
        s.normalize();
        if (s.v > 0)
            throw verification_error("calibrate_x: verification failed, entry not integral");
        if (s.abs < ctx.m) throw precision_error("calibrate_x: insufficient precision after calibration");
    }
    return res;
}

namespace detail {

inline Poly<mpz_class> poly_pow_mod(const Poly<mpz_class>& base, long e, const mpz_class& mod) {
    Poly<mpz_class> r{1};
    for (long k = 0; k < e; ++k) {
        r = r * base;
        for (auto& z : r.c) {
            z %= mod;
            if (z < 0) z += mod;
        }
        r.trim();
    }
    return r;
}

// series inverse of an integer polynomial with unit constant term, mod `mod`, length `order`
inline std::vector<mpz_class> poly_series_inverse(const Poly<mpz_class>& f, const mpz_class& mod,
                                                  int order) {
    std::vector<mpz_class> inv(static_cast<size_t>(order), mpz_class(0));
    mpz_class inv0 = mod_inv(f.c.empty() ? mpz_class(1) : f.c[0], mod);
    if (mpz_fits_ulong_p(mod.get_mpz_t()) && mod.get_ui() < (1UL << 61)) {
        unsigned long md = mod.get_ui();
        std::vector<unsigned long> fv(f.c.size()), iv(static_cast<size_t>(order), 0);
        for (size_t i = 0; i < f.c.size(); ++i) fv[i] = mpz_fdiv_ui(f.c[i].get_mpz_t(), md);
        unsigned long i0 = mpz_fdiv_ui(inv0.get_mpz_t(), md);
        iv[0] = i0;
        for (int n = 1; n < order; ++n) {
            unsigned __int128 s = 0;
            size_t kmax = std::min<size_t>(static_cast<size_t>(n), f.c.size() - 1);
            for (size_t k = 1; k <= kmax; ++k) {
                s += static_cast<unsigned __int128>(fv[k]) * iv[static_cast<size_t>(n) - k];
                if ((k & 7) == 0) s %= md;  // 8 products of (2^61)^2 stay inside 128 bits
            }
            unsigned long sl = static_cast<unsigned long>(s % md);
            iv[static_cast<size_t>(n)] =
                static_cast<unsigned long>(static_cast<unsigned __int128>(md - sl) * i0 % md);
        }
        for (int n = 0; n < order; ++n) inv[static_cast<size_t>(n)] = iv[static_cast<size_t>(n)];
        return inv;
    }
    inv[0] = inv0;
    for (int n = 1; n < order; ++n) {
        mpz_class s = 0;
        for (size_t k = 1; k <= static_cast<size_t>(n) && k < f.c.size(); ++k)
            s += f.c[k] * inv[static_cast<size_t>(n) - k];
        s %= mod;
        inv[static_cast<size_t>(n)] = ((-s * inv0) % mod + mod) % mod;
    }
    return inv;
}

inline void poly_mul_acc(const Poly<mpz_class>& f, const std::vector<mpz_class>& series,
                         const mpz_class& mod, std::vector<mpz_class>& out) {
    // word-size fast path: moduli here are p^rem <= p^m, which fits 64 bits for every
    // precision the auto policy reaches at p < 1000; accumulate in 128 bits
    if (mpz_fits_ulong_p(mod.get_mpz_t()) && mod.get_ui() < (1UL << 62)) {
        unsigned long md = mod.get_ui();
        std::vector<unsigned long> fv(f.c.size()), sv(series.size()), ov(out.size());
        for (size_t i = 0; i < f.c.size(); ++i) fv[i] = mpz_fdiv_ui(f.c[i].get_mpz_t(), md);
        for (size_t n = 0; n < series.size(); ++n) sv[n] = mpz_fdiv_ui(series[n].get_mpz_t(), md);
        for (size_t k = 0; k < out.size(); ++k) ov[k] = mpz_fdiv_ui(out[k].get_mpz_t(), md);
        for (size_t i = 0; i < fv.size(); ++i) {
            if (fv[i] == 0) continue;
            unsigned __int128 c = fv[i];
            size_t nmax = std::min(series.size(), out.size() - i);
            unsigned long* o = ov.data() + i;
            for (size_t n = 0; n < nmax; ++n) {
                if (sv[n] == 0) continue;
                unsigned long cur = o[n] + static_cast<unsigned long>(c * sv[n] % md);
                if (cur >= md) cur -= md;
                o[n] = cur;
            }
        }
        for (size_t k = 0; k < out.size(); ++k) out[k] = ov[k];
        return;
    }
    for (size_t i = 0; i < f.c.size(); ++i) {
        if (f.c[i] == 0) continue;
        for (size_t n = 0; n + i < out.size() && n < series.size(); ++n) {
            if (series[n] == 0) continue;
            out[n + i] = (out[n + i] + f.c[i] * series[n]) % mod;
        }
    }
}

}  // namespace detail

// Greedy p-power layer extraction with denominator clearing. When `kprime` is supplied
// (integer coefficients of K/p^3 mod p^{m-3}) together with the number of x-digits already
// pinned, the undetermined digits of x are solved from the linear tail congruences that
// make each deep layer a polynomial over Delta^{p delta}.
struct ClearOutput {
    RationalUMatrix R;
    mpz_class x;
    long x_digits = 0;  // digits of x genuinely pinned by integrality + layer tails
};

inline ClearOutput clear_denominators_core(
    const std::vector<std::vector<mpz_class>>& u_int, int order, const Discriminant& disc,
    const PadicContext& ctx, int delta_max,
    const std::vector<std::vector<mpz_class>>* kprime, const mpz_class& x_base, long x_base_digits) {
    long p_long = ctx.p.get_si();
    int m = ctx.m;
    int degD = std::max<int>(1, static_cast<int>(disc.degree()));
    ClearOutput out;
    out.R.p = ctx.p;
    out.R.m = m;
    out.x = x_base;
    out.x_digits = std::max<long>(x_base_digits, 0);

    std::vector<std::vector<mpz_class>> residual = u_int;
    bool refinement_alive = true;

    for (int layer = 0; layer < m; ++layer) {
        int rem = m - layer;
        mpz_class prem = ctx.ppow[static_cast<size_t>(rem)];
        bool refine_here = refinement_alive && kprime != nullptr && layer >= 3 &&
                           (layer - 3) >= out.x_digits && layer - 3 < m - 3;
        // A layer certifies as V/Delta^{p delta} when, after multiplying by Delta^{p delta},
        // everything beyond the observed degree vanishes and the vanishing tail is at least
        // `window` long (long enough to exclude a residual Delta^{p}-denominator).
        const int window = static_cast<int>(p_long) * degD + 2;
        const int tail_len = window + 4 * degD + 2;
        int found_delta = -1;
        int found_degree = 0;
        mpz_class digit_used = 0;
        bool digit_pinned = false;
        std::array<Poly<mpz_class>, 16> Vmat;
        for (int d = 0; d <= delta_max && found_delta < 0; ++d) {
            Poly<mpz_class> dp = detail::poly_pow_mod(disc.poly, p_long * d, ctx.p);
            if (tail_len * 2 >= order) break;
            auto make_prod = [&](const std::vector<std::vector<mpz_class>>& src, int e,
                                 std::vector<mpz_class>& dst) {
                dst.assign(static_cast<size_t>(order), mpz_class(0));
                std::vector<mpz_class> lay(static_cast<size_t>(order));
                for (int n = 0; n < order; ++n)
                    lay[static_cast<size_t>(n)] = src[static_cast<size_t>(e)][static_cast<size_t>(n)] % ctx.p;
                detail::poly_mul_acc(dp, lay, ctx.p, dst);
            };
            std::array<std::vector<mpz_class>, 16> prod;
            for (int e = 0; e < 16; ++e) make_prod(residual, e, prod[static_cast<size_t>(e)]);
            // Candidate digits for x at this layer. The perturbation direction K' Delta^{pd}
            // is sparse mod p, so a fixed solving region can land in a support gap; try, in
            // order: a region anchored at the top of the K-support, the top of the series,
            // and finally no digit at all. Each candidate must pass the degree-collapse
            // certification below; positions in a valid region obey c_n + y k_n = 0 linearly.
            struct DigitCandidate {
                mpz_class y;
                bool pinned;
            };
            std::vector<DigitCandidate> candidates;
            std::array<std::vector<mpz_class>, 16> kprod;
            if (refine_here) {
                for (int e = 0; e < 16; ++e) make_prod(*kprime, e, kprod[static_cast<size_t>(e)]);
                int support_top = -1;
                for (int e = 0; e < 16; ++e)
                    for (int n = order - 1; n > support_top; --n)
                        if (kprod[static_cast<size_t>(e)][static_cast<size_t>(n)] != 0) {
                            support_top = n;
                            break;
                        }
                auto solve_region = [&](int lo, int hi) -> std::optional<mpz_class> {
                    bool have = false;
                    mpz_class yv = 0;
                    for (int e = 0; e < 16; ++e)
                        for (int n = lo; n < hi; ++n) {
                            const mpz_class& kn = kprod[static_cast<size_t>(e)][static_cast<size_t>(n)];
                            const mpz_class& cn = prod[static_cast<size_t>(e)][static_cast<size_t>(n)];
                            if (kn == 0) {
                                if (cn != 0) return std::nullopt;
                                continue;
                            }
                            mpz_class cand = (ctx.p - cn) * mod_inv(kn, ctx.p) % ctx.p;
                            if (!have) {
                                yv = cand;
                                have = true;
                            } else if (cand != yv) {
                                return std::nullopt;
                            }
                        }
                    if (!have) return std::nullopt;
                    return yv;
                };
                auto push_unique = [&](const mpz_class& yv, bool pinned) {
                    for (const auto& c : candidates)
                        if (c.y == yv) return;
                    candidates.push_back({yv, pinned});
                };
                if (support_top >= 0) {
                    int floor_n = std::max(window, static_cast<int>(p_long) * d * degD + 8 * degD);
                    int lo = std::max(floor_n, support_top - tail_len);
                    if (lo < order)
                        if (auto yv = solve_region(lo, order)) push_unique(*yv, true);
                }
                if (auto yv = solve_region(order - tail_len, order)) push_unique(*yv, true);
                push_unique(mpz_class(0), false);
#ifdef EULERFACTORY_TRACE_CLEAR
                fprintf(stderr, "[cand] layer=%d d=%d support_top=%d ncand=%zu first_y=%s\n",
                        layer, d, support_top, candidates.size(),
                        candidates.empty() ? "-" : candidates[0].y.get_str().c_str());
#endif
            } else {
                candidates.push_back({mpz_class(0), false});
            }
            for (const auto& cand_digit : candidates) {
                const mpz_class& y = cand_digit.y;
                if (refine_here && y != 0) {
                    // perturbing U by p^{layer} y K' shifts this residual by y K' (mod p^rem);
                    // carries into deeper layers ride along automatically
                    for (int e = 0; e < 16; ++e) {
                        auto& re = residual[static_cast<size_t>(e)];
                        const auto& ke = (*kprime)[static_cast<size_t>(e)];
                        for (int n = 0; n < order; ++n)
                            re[static_cast<size_t>(n)] =
                                (re[static_cast<size_t>(n)] + y * ke[static_cast<size_t>(n)]) % prem;
                    }
                    for (int e = 0; e < 16; ++e) make_prod(residual, e, prod[static_cast<size_t>(e)]);
                }
                bool ok = true;
                int maxdeg = -1;
                std::array<Poly<mpz_class>, 16> cand;
                for (int e = 0; e < 16 && ok; ++e) {
                    int deg = -1;
                    for (int n = order - 1; n >= 0; --n)
                        if (prod[static_cast<size_t>(e)][static_cast<size_t>(n)] != 0) {
                            deg = n;
                            break;
                        }
                    if (order - 1 - deg < window) {
                        ok = false;
                        break;
                    }
                    maxdeg = std::max(maxdeg, deg);
                    Poly<mpz_class> vpol;
                    vpol.c.assign(prod[static_cast<size_t>(e)].begin(),
                                  prod[static_cast<size_t>(e)].begin() + (deg + 1));
                    vpol.trim();
                    cand[static_cast<size_t>(e)] = vpol;
                }
#ifdef EULERFACTORY_TRACE_CLEAR
                fprintf(stderr, "[try] layer=%d d=%d y=%s ok=%d maxdeg=%d\n", layer, d,
                        y.get_str().c_str(), (int)ok, maxdeg);
#endif
                if (ok) {
                    found_delta = d;
                    found_degree = maxdeg;
                    Vmat = cand;
                    digit_used = y;
                    digit_pinned = cand_digit.pinned;
                    break;
                }
                if (refine_here && y != 0) {
                    // undo the tentative digit before the next candidate
                    for (int e = 0; e < 16; ++e) {
                        auto& re = residual[static_cast<size_t>(e)];
                        const auto& ke = (*kprime)[static_cast<size_t>(e)];
                        for (int n = 0; n < order; ++n) {
                            mpz_class val =
                                (re[static_cast<size_t>(n)] - y * ke[static_cast<size_t>(n)]) % prem;
                            if (val < 0) val += prem;
                            re[static_cast<size_t>(n)] = val;
                        }
                    }
                    for (int e = 0; e < 16; ++e) make_prod(residual, e, prod[static_cast<size_t>(e)]);
                }
            }
#ifdef EULERFACTORY_TRACE_CLEAR
            fprintf(stderr, "[clear] layer=%d delta=%d refine=%d accepted=%d y=%s pinned=%d\n",
                    layer, d, (int)refine_here, (int)(found_delta == d),
                    digit_used.get_str().c_str(), (int)digit_pinned);
#endif
        }
        if (found_delta < 0)
            throw precision_error("order-insufficient: cannot certify layer " +
                                  std::to_string(layer) + " at order " + std::to_string(order) +
                                  " with delta <= " + std::to_string(delta_max));
        if (refine_here) {
            if (digit_pinned) {
                out.x += digit_used * ctx.ppow[static_cast<size_t>(layer - 3)];
                out.x_digits = layer - 3 + 1;
            } else {
                // tail cannot see this digit; deeper digits are unknowable too
                refinement_alive = false;
            }
        }
        out.R.delta.push_back(found_delta);
        out.R.degree.push_back(found_degree);
        out.R.V.push_back(Vmat);
        if (layer + 1 == m) break;
        // residual <- (residual - V/Delta^{p delta}) / p   (mod p^{rem-1})
        Poly<mpz_class> dfull = detail::poly_pow_mod(disc.poly, p_long * found_delta, prem);
        std::vector<mpz_class> dinv = detail::poly_series_inverse(dfull, prem, order);
        for (int e = 0; e < 16; ++e) {
            std::vector<mpz_class> expand(static_cast<size_t>(order), mpz_class(0));
            detail::poly_mul_acc(Vmat[static_cast<size_t>(e)], dinv, prem, expand);
            auto& re = residual[static_cast<size_t>(e)];
            for (int n = 0; n < order; ++n) {
                mpz_class diff = (re[static_cast<size_t>(n)] - expand[static_cast<size_t>(n)]) % prem;
                if (diff < 0) diff += prem;
                if (diff % ctx.p != 0)
                    throw verification_error("clear_denominators: layer subtraction left a unit");
                re[static_cast<size_t>(n)] = diff / ctx.p;
            }
        }
    }
    return out;
}

// Plain spec-surface variant: clears an already-calibrated integral U series.
inline RationalUMatrix clear_denominators(const UMatrixSeries& useries, const Discriminant& disc,
                                          const PadicContext& ctx, int delta_max = 4) {
    int order = useries.order;
    std::vector<std::vector<mpz_class>> u_int(16);
    for (int e = 0; e < 16; ++e) {
        u_int[static_cast<size_t>(e)].resize(static_cast<size_t>(order));
        for (int n = 0; n < order; ++n)
            u_int[static_cast<size_t>(e)][static_cast<size_t>(n)] =
                useries.u.e[static_cast<size_t>(e)].integral_coeff(static_cast<size_t>(n), ctx.m);
    }
    return clear_denominators_core(u_int, order, disc, ctx, delta_max, nullptr, 0, 0).R;
}

// Re-expansion of the cleared form as integer series mod p^m (round-trip oracle).
inline std::vector<mpz_class> reexpand_entry(const RationalUMatrix& R, const Discriminant& disc,
                                             int entry, int order) {
    long p_long = R.p.get_si();
    mpz_class pm = pow_ui(R.p, static_cast<unsigned long>(R.m));
    std::vector<mpz_class> acc(static_cast<size_t>(order), mpz_class(0));
    for (size_t layer = 0; layer < R.V.size(); ++layer) {
        mpz_class pl = pow_ui(R.p, static_cast<unsigned long>(layer));
        Poly<mpz_class> dfull = detail::poly_pow_mod(disc.poly, p_long * R.delta[layer], pm);
        std::vector<mpz_class> dinv = detail::poly_series_inverse(dfull, pm, order);
        const Poly<mpz_class>& vp = R.V[layer][static_cast<size_t>(entry)];
        for (size_t i = 0; i < vp.c.size(); ++i) {
            if (vp.c[i] == 0) continue;
            for (size_t nn = 0; nn + i < static_cast<size_t>(order); ++nn)
                acc[nn + i] = (acc[nn + i] + pl * vp.c[i] % pm * dinv[nn]) % pm;
        }
    }
    return acc;
}

// Evaluates the cleared form at the Teichmueller point: U(mu) mod p^m.
inline std::array<mpz_class, 16> evaluate_rational_u(const RationalUMatrix& R, const Discriminant& disc,
                                                     const mpz_class& mu) {
    mpz_class pm = pow_ui(R.p, static_cast<unsigned long>(R.m));
    std::array<mpz_class, 16> out;
    mpz_class dmu = eval_mod(disc.poly, mu, pm);
    long p_long = R.p.get_si();
    for (int e = 0; e < 16; ++e) {
        mpz_class acc = 0;
        for (size_t layer = 0; layer < R.V.size(); ++layer) {
            mpz_class pl = pow_ui(R.p, static_cast<unsigned long>(layer));
            mpz_class denom = mod_pow(dmu, mpz_class(p_long * R.delta[layer]), pm);
            mpz_class val = eval_mod(R.V[layer][static_cast<size_t>(e)], mu, pm);
            acc = (acc + pl * val % pm * mod_inv(denom, pm)) % pm;
        }
        out[static_cast<size_t>(e)] = acc;
    }
    return out;
}

// det(1 - U T) coefficients c1..c4 mod p^m, division-free (principal minors).
inline std::array<mpz_class, 4> charpoly_reciprocal(const std::array<mpz_class, 16>& U,
                                                    const mpz_class& pm) {
    auto at = [&](int i, int j) -> const mpz_class& { return U[static_cast<size_t>(4 * i + j)]; };
    auto reduce = [&](const mpz_class& z) {
        mpz_class r = z % pm;
        if (r < 0) r += pm;
        return r;
    };
    std::array<mpz_class, 4> c;
    mpz_class tr = 0;
    for (int i = 0; i < 4; ++i) tr += at(i, i);
    c[0] = reduce(-tr);
    mpz_class m2 = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) m2 += at(i, i) * at(j, j) - at(i, j) * at(j, i);
    c[1] = reduce(m2);
    mpz_class m3 = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k) {
                m3 += at(i, i) * (at(j, j) * at(k, k) - at(j, k) * at(k, j));
                m3 -= at(i, j) * (at(j, i) * at(k, k) - at(j, k) * at(k, i));
                m3 += at(i, k) * (at(j, i) * at(k, j) - at(j, j) * at(k, i));
            }
    c[2] = reduce(-m3);
    mpz_class det = 0;
    for (int j = 0; j < 4; ++j) {
        int cols[3], cc = 0;
        for (int k = 0; k < 4; ++k)
            if (k != j) cols[cc++] = k;
        mpz_class d3 = at(1, cols[0]) * (at(2, cols[1]) * at(3, cols[2]) - at(2, cols[2]) * at(3, cols[1])) -
                       at(1, cols[1]) * (at(2, cols[0]) * at(3, cols[2]) - at(2, cols[2]) * at(3, cols[0])) +
                       at(1, cols[2]) * (at(2, cols[0]) * at(3, cols[1]) - at(2, cols[1]) * at(3, cols[0]));
        if (j % 2 == 0)
            det += at(0, j) * d3;
        else
            det -= at(0, j) * d3;
    }
    c[3] = reduce(det);
    return c;
}

// Reconstructs the operator-level rational x from per-prime calibrations via
// x = x_p / zeta_p(3) and CRT + rational reconstruction. Tuples are (p, x_p, digits).
inline std::optional<mpq_class> reconstruct_x(const std::vector<std::tuple<mpz_class, mpz_class, long>>& xs) {
    mpz_class R = 0, M = 1;
    for (const auto& [p, xp, digits] : xs) {
        long k = digits;
        if (k <= 0) return std::nullopt;
        mpz_class zk = zeta_p3(p, static_cast<int>(k));
        mpz_class pk = pow_ui(p, static_cast<unsigned long>(k));
        if (zk % p == 0) return std::nullopt;  // zeta_p(3) unit expected away from irregular cases
        mpz_class ratio = xp * mod_inv(zk % pk, pk) % pk;
        if (M == 1) {
            R = ratio;
            M = pk;
        } else {
            auto [nr, nm] = crt(R, M, ratio, pk);
            R = nr;
            M = nm;
        }
    }
    return rational_reconstruct(R, M);
}

}  // namespace eulerfactory

#endif
