#ifndef EULERFACTORY_LFUNCTION_HPP
#define EULERFACTORY_LFUNCTION_HPP

#include <eulerfactory/euler.hpp>

#include <mpfr.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace eulerfactory {

// Thin RAII value wrapper over mpfr_t. Precision is fixed at construction; binary
// operations produce results at the larger operand precision.
class Real {
public:
    explicit Real(mpfr_prec_t prec = 128) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    Real(const Real& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
    Real(Real&& o) noexcept { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_swap(v_, o.v_); }
    Real& operator=(const Real& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Real& operator=(Real&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    static Real of(double x, mpfr_prec_t prec) {
        Real r(prec);
        mpfr_set_d(r.v_, x, MPFR_RNDN);
        return r;
    }
    static Real of(long x, mpfr_prec_t prec) {
        Real r(prec);
        mpfr_set_si(r.v_, x, MPFR_RNDN);
        return r;
    }
    static Real of(const mpz_class& x, mpfr_prec_t prec) {
        Real r(prec);
        mpfr_set_z(r.v_, x.get_mpz_t(), MPFR_RNDN);
        return r;
    }
    static Real of(const mpq_class& x, mpfr_prec_t prec) {
        Real r(prec);
        mpfr_set_q(r.v_, x.get_mpq_t(), MPFR_RNDN);
        return r;
    }
    static Real pi(mpfr_prec_t prec) {
        Real r(prec);
        mpfr_const_pi(r.v_, MPFR_RNDN);
        return r;
    }
    static Real euler_gamma(mpfr_prec_t prec) {
        Real r(prec);
        mpfr_const_euler(r.v_, MPFR_RNDN);
        return r;
    }

    mpfr_prec_t prec() const { return mpfr_get_prec(v_); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_); }
    int sign() const { return mpfr_sgn(v_); }

    std::string str(int digits = 20) const {
        char* s = nullptr;
        mpfr_asprintf(&s, "%.*Rg", digits, v_);
        std::string out(s);
        mpfr_free_str(s);
        return out;
    }

    friend Real operator+(const Real& a, const Real& b) {
        Real r(std::max(a.prec(), b.prec()));
        mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator-(const Real& a, const Real& b) {
        Real r(std::max(a.prec(), b.prec()));
        mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator*(const Real& a, const Real& b) {
        Real r(std::max(a.prec(), b.prec()));
        mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator/(const Real& a, const Real& b) {
        Real r(std::max(a.prec(), b.prec()));
        mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    Real operator-() const {
        Real r(prec());
        mpfr_neg(r.v_, v_, MPFR_RNDN);
        return r;
    }
    friend bool operator<(const Real& a, const Real& b) { return mpfr_cmp(a.v_, b.v_) < 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_cmp(a.v_, b.v_) > 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_cmp(a.v_, b.v_) <= 0; }

    friend Real sqrt(const Real& a) {
        Real r(a.prec());
        mpfr_sqrt(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real log(const Real& a) {
        Real r(a.prec());
        mpfr_log(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real exp(const Real& a) {
        Real r(a.prec());
        mpfr_exp(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real abs(const Real& a) {
        Real r(a.prec());
        mpfr_abs(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real pow(const Real& a, const Real& b) {
        Real r(std::max(a.prec(), b.prec()));
        mpfr_pow(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    Real with_prec(mpfr_prec_t p) const {
        Real r(p);
        mpfr_set(r.v_, v_, MPFR_RNDN);
        return r;
    }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

private:
    mpfr_t v_;
};

// Modified Bessel K_1 at extended precision: ascending series (with a working-precision
// boost absorbing the e^{2x} cancellation) below the crossover, asymptotic expansion above.
inline Real besselk1(const Real& x, mpfr_prec_t out_prec) {
    double xd = x.to_double();
    if (!(xd > 0)) throw input_error("besselk1: argument must be positive");
    // asymptotic truncation error ~ e^{-2x}; series is used below the matching crossover
    double crossover = 0.3466 * (static_cast<double>(out_prec) + 20.0);
    if (xd < crossover) {
        mpfr_prec_t wp = out_prec + static_cast<mpfr_prec_t>(2.8854 * xd) + 48;
        Real xx = x.with_prec(wp);
        Real half = Real::of(0.5, wp);
        Real x2 = xx * half;            // x/2
        Real q = x2 * x2;               // x^2/4
        Real gamma = Real::euler_gamma(wp);
        Real lg = log(x2);
        // I1 series and the psi-weighted series run together:
        //   K1 = 1/x + log(x/2) I1(x) - (x/4) sum_k (psi(k+1)+psi(k+2)) q^k / (k! (k+1)!)
        // with psi(k+1)+psi(k+2) = -2 gamma + H_k + H_{k+1}
        Real term = Real::of(1L, wp);   // q^k / (k!(k+1)!)
        Real i1 = Real::of(0L, wp);
        Real psum = Real::of(0L, wp);
        Real Hk = Real::of(0L, wp);
        Real eps = exp(Real::of(-0.6931471805599453 * static_cast<double>(wp), wp));
        for (long k = 0;; ++k) {
            Real Hk1 = Hk + Real::of(1L, wp) / Real::of(k + 1, wp);
            Real w = Hk + Hk1 - gamma - gamma;
            i1 = i1 + term;
            psum = psum + term * w;
            Real next = term * q / (Real::of(k + 1, wp) * Real::of(k + 2, wp));
            if (k > 4 && abs(next) < eps * (abs(i1) + Real::of(1L, wp))) break;
            term = next;
            Hk = Hk1;
            if (k > 100000) throw precision_error("besselk1: series did not converge");
        }
        Real r = Real::of(1L, wp) / xx + lg * (x2 * i1) - x2 * half * psum;
        return r.with_prec(out_prec);
    }
    // asymptotic: sqrt(pi/2x) e^{-x} (1 + sum_k a_k / x^k), a_k = prod (4 - (2j-1)^2)/(8^k k!)
    mpfr_prec_t wp = out_prec + 32;
    Real xx = x.with_prec(wp);
    Real sum = Real::of(1L, wp);
    Real term = Real::of(1L, wp);
    Real prev = abs(term);
    for (long k = 1; k < 4 * 4096; ++k) {
        long num = 4 - (2 * k - 1) * (2 * k - 1);
        term = term * Real::of(num, wp) / (Real::of(8 * k, wp) * xx);
        if (!(abs(term) < prev)) break;  // divergence point of the asymptotic series
        sum = sum + term;
        prev = abs(term);
        Real eps = exp(Real::of(-0.6931471805599453 * static_cast<double>(wp), wp));
        if (abs(term) < eps) break;
    }
    Real pi = Real::pi(wp);
    Real r = sqrt(pi / (Real::of(2L, wp) * xx)) * exp(-xx) * sum;
    return r.with_prec(out_prec);
}

// Inverse Mellin transform of the full archimedean factor
// (N/pi^4)^{s/2} Gamma((s-1)/2) Gamma(s/2)^2 Gamma((s+1)/2):
// by Legendre duplication it collapses to 8 pi (sqrt(N)/4pi^2)^s Gamma(s-1) Gamma(s), whose
// inverse transform is phi(x) = 8 N^{1/4} K_1(4 pi sqrt(x) / N^{1/4}) / sqrt(x).
inline Real gamma_kernel(const Real& x, long N, mpfr_prec_t prec) {
    if (!(x.to_double() > 0)) throw input_error("gamma_kernel: x must be positive");
    mpfr_prec_t wp = prec + 16;
    Real pi = Real::pi(wp);
    Real n4 = pow(Real::of(N, wp), Real::of(0.25, wp));
    Real sx = sqrt(x.with_prec(wp));
    Real arg = Real::of(4L, wp) * pi * sx / n4;
    Real k1 = besselk1(arg, wp);
    Real r = Real::of(8L, wp) * n4 * k1 / sx;
    return r.with_prec(prec);
}

// --- L-function specification ------------------------------------------------------

struct LFunctionSpec {
    long N = 1;
    int epsilon = +1;
    std::map<long, EulerFactor> good;
    std::map<long, BadEulerFactor> bad;
    long pmax = 0;

    void validate() const {
        if (N <= 0) throw input_error("LFunctionSpec: conductor must be positive");
        if (epsilon != 1 && epsilon != -1) throw input_error("LFunctionSpec: sign must be +-1");
        for (long p : primes_up_to(pmax)) {
            bool g = good.count(p) > 0, b = bad.count(p) > 0;
            if (g == b)
                throw input_error("LFunctionSpec: prime " + std::to_string(p) +
                                  " must appear in exactly one of good/bad");
        }
    }

    LFunctionSpec truncated(long new_pmax) const {
        LFunctionSpec s;
        s.N = N;
        s.epsilon = epsilon;
        s.pmax = new_pmax;
        for (auto& [p, f] : good)
            if (p <= new_pmax) s.good.emplace(p, f);
        for (auto& [p, f] : bad)
            if (p <= new_pmax) s.bad.emplace(p, f);
        return s;
    }
};

// Dirichlet coefficients of the partial Euler product: a_n multiplicative, prime-power
// values from the series expansion of 1/E_p(T); a_n = 0 when n has a prime factor > pmax.
inline std::vector<mpz_class> dirichlet_coefficients(const LFunctionSpec& spec, long n_max) {
    spec.validate();
    std::vector<long> spf(static_cast<size_t>(n_max) + 1, 0);
    for (long i = 2; i <= n_max; ++i)
        if (spf[static_cast<size_t>(i)] == 0)
            for (long j = i; j <= n_max; j += i)
                if (spf[static_cast<size_t>(j)] == 0) spf[static_cast<size_t>(j)] = i;
    // inverse-series coefficients per prime
    std::map<long, std::vector<mpz_class>> inv;
    auto inv_coeffs = [&](long p, const std::array<mpz_class, 5>& e) {
        int kmax = 0;
        for (long q = 1; q <= n_max; q *= p) {
            ++kmax;
            if (q > n_max / p) break;
        }
        std::vector<mpz_class> u(static_cast<size_t>(kmax) + 1);
        u[0] = 1;
        for (int k = 1; k <= kmax; ++k) {
            mpz_class s = 0;
            for (int j = 1; j <= std::min(4, k); ++j) s += e[static_cast<size_t>(j)] * u[static_cast<size_t>(k - j)];
            u[static_cast<size_t>(k)] = -s;
        }
        return u;
    };
    for (auto& [p, f] : spec.good) {
        if (p > n_max) break;
        mpz_class pz(p), p3 = pz * pz * pz;
        inv[p] = inv_coeffs(p, {mpz_class(1), f.alpha, f.beta * pz, f.alpha * p3, p3 * p3});
    }
    for (auto& [p, f] : spec.bad) {
        if (p > n_max) break;
        inv[p] = inv_coeffs(p, {f.coeffs[0], f.coeffs[1], f.coeffs[2], f.coeffs[3], mpz_class(0)});
    }
    std::vector<mpz_class> a(static_cast<size_t>(n_max) + 1, mpz_class(0));
    a[1] = 1;
    for (long n = 2; n <= n_max; ++n) {
        long p = spf[static_cast<size_t>(n)];
        if (p > spec.pmax || inv.count(p) == 0) {
            a[static_cast<size_t>(n)] = 0;
            continue;
        }
        long q = n, k = 0;
        while (q % p == 0) {
            q /= p;
            ++k;
        }
        if (a[static_cast<size_t>(q)] == 0 && q != 1) {
            a[static_cast<size_t>(n)] = 0;
            continue;
        }
        a[static_cast<size_t>(n)] = a[static_cast<size_t>(q)] * inv[p][static_cast<size_t>(k)];
    }
    return a;
}

// --- Smoothed functional-equation check ---------------------------------------------

struct FeqConfig {
    std::vector<double> points = {1.05, 1.2};
    int digits = 30;  // working precision in decimal digits for the Theta sums
    long n_cap = 1 << 20;
};

struct FeqResult {
    double eta = 0;            // max normalized residual over the test points
    double tail_bound = 0;     // certified truncation tail of the Theta sums
    long n_used = 0;           // Theta summation length
    std::string log;
};

namespace detail {

// number-of-divisors-style bound d4(n) for the Ramanujan tail estimate
inline long d4_of(long n, const std::vector<long>& spf) {
    long d = 1;
    while (n > 1) {
        long p = spf[static_cast<size_t>(n)], e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        d *= (e + 1) * (e + 2) * (e + 3) / 6;
    }
    return d;
}

// deterministic blockwise tree reduction (bitwise reproducible regardless of threading)
inline Real tree_sum(std::vector<Real>& terms, mpfr_prec_t prec) {
    if (terms.empty()) return Real::of(0L, prec);
    std::vector<Real> level;
    for (size_t i = 0; i < terms.size(); i += 64) {
        Real blk = Real::of(0L, prec);
        for (size_t j = i; j < std::min(terms.size(), i + 64); ++j) blk = blk + terms[j];
        level.push_back(blk);
    }
    while (level.size() > 1) {
        std::vector<Real> next;
        for (size_t i = 0; i < level.size(); i += 2) {
            if (i + 1 < level.size())
                next.push_back(level[i] + level[i + 1]);
            else
                next.push_back(level[i]);
        }
        level.swap(next);
    }
    return level[0];
}

}  // namespace detail

// eta = max over test points t of |Theta(t) - eps t^{-4} Theta(1/t)| / (|Theta(t)| + |t^{-4} Theta(1/t)|)
// where Theta(t) = sum a_n phi(n t) and phi is the archimedean kernel above. For the true
// completed L-function Theta(t) = eps t^{-4} Theta(1/t) exactly; the partial Euler product
// turns the identity into the residual the precision curves track.
inline FeqResult check_feq(const LFunctionSpec& spec, const FeqConfig& cfg = {}) {
    spec.validate();
    mpfr_prec_t prec = static_cast<mpfr_prec_t>(cfg.digits * 3.3220) + 36;
    double t_min = 1e9;
    for (double t : cfg.points) t_min = std::min({t_min, t, 1.0 / t});
    double target = std::pow(10.0, -(cfg.digits - 4));

    // adaptive n_max with a certified d4-weighted tail bound: sum the next two octaves
    // exactly; once the second octave is down by 4x the remainder is dominated by it
    long n_max = 64;
    double tail = 0;
    for (;; n_max *= 2) {
        if (n_max > cfg.n_cap) throw precision_error("tail-not-converged: n_max exceeds cap");
        std::vector<long> spf(static_cast<size_t>(4 * n_max) + 1, 0);
        for (long i = 2; i <= 4 * n_max; ++i)
            if (spf[static_cast<size_t>(i)] == 0)
                for (long j = i; j <= 4 * n_max; j += i)
                    if (spf[static_cast<size_t>(j)] == 0) spf[static_cast<size_t>(j)] = i;
        auto octave = [&](long lo, long hi) {
            double s = 0;
            for (long n = lo; n <= hi; ++n) {
                double phi =
                    gamma_kernel(Real::of(static_cast<double>(n) * t_min, 64), spec.N, 64)
                        .to_double();
                s += static_cast<double>(detail::d4_of(n, spf)) *
                     std::pow(static_cast<double>(n), 1.5) * phi;
            }
            return s;
        };
        double s1 = octave(n_max + 1, 2 * n_max);
        double s2 = octave(2 * n_max + 1, 4 * n_max);
        tail = s1 + 2 * s2;  // octaves keep shrinking at least as fast beyond the horizon
        if (s2 <= s1 / 4 && tail < target / 10) break;
    }

    auto a = dirichlet_coefficients(spec, n_max);
    FeqResult res;
    res.n_used = n_max;
    res.tail_bound = tail;
    double worst = 0;
    std::ostringstream lg;
    for (double tpt : cfg.points) {
        // the reflection point 1/t must be formed at working precision; a double-rounded
        // mirror floors the residual near 1e-17 regardless of the working precision
        Real tp = Real::of(tpt, prec);
        Real tinv = Real::of(1L, prec) / tp;
        auto theta_at = [&](const Real& t) {
            std::vector<Real> terms;
            terms.reserve(static_cast<size_t>(n_max));
            for (long n = 1; n <= n_max; ++n) {
                if (a[static_cast<size_t>(n)] == 0) continue;
                Real arg = Real::of(n, prec) * t;
                Real phi = gamma_kernel(arg, spec.N, prec);
                terms.push_back(Real::of(a[static_cast<size_t>(n)], prec) * phi);
            }
            return detail::tree_sum(terms, prec);
        };
        Real th = theta_at(tp);
        Real th_inv = theta_at(tinv);
        Real mirrored = th_inv / (tp * tp * tp * tp);
        if (spec.epsilon < 0) mirrored = -mirrored;
        Real num = abs(th - mirrored);
        Real den = abs(th) + abs(mirrored);
        double eta_pt = (num / den).to_double();
        lg << "t=" << tpt << " eta=" << eta_pt << "\n";
        worst = std::max(worst, eta_pt);
    }
    res.eta = worst;
    res.log = lg.str();
    return res;
}

// --- Precision curve ----------------------------------------------------------------

struct PrecisionCurve {
    std::vector<std::pair<long, double>> points;  // (pmax, eta)
    double fitted_c = 0;
};

inline PrecisionCurve precision_curve(const LFunctionSpec& spec, const std::vector<long>& grid,
                                      const FeqConfig& cfg = {}) {
    if (grid.size() < 2) throw input_error("precision_curve: grid of length >= 2 required");
    PrecisionCurve out;
    for (long pm : grid) {
        LFunctionSpec s = spec.truncated(pm);
        FeqResult r = check_feq(s, cfg);
        out.points.emplace_back(pm, r.eta);
    }
    // least squares through the origin on log eta = -c N^{-1/4} sqrt(pmax),
    // excluding noise-floor points; robust second pass drops > 2x residuals
    double floor_eta = std::pow(10.0, -(cfg.digits - 6));
    auto fit = [&](const std::vector<std::pair<long, double>>& pts) {
        double sxy = 0, sxx = 0;
        int used = 0;
        double n14 = std::pow(static_cast<double>(spec.N), 0.25);
        for (auto& [pm, eta] : pts) {
            if (eta <= floor_eta || eta <= 0) continue;
            double xv = std::sqrt(static_cast<double>(pm)) / n14;
            double yv = -std::log(eta);
            sxy += xv * yv;
            sxx += xv * xv;
            ++used;
        }
        if (used < 3) throw input_error("precision_curve: fewer than 3 usable points");
        return sxy / sxx;
    };
    double c1 = fit(out.points);
    std::vector<std::pair<long, double>> keep;
    double n14 = std::pow(static_cast<double>(spec.N), 0.25);
    for (auto& [pm, eta] : out.points) {
        if (eta <= floor_eta || eta <= 0) continue;
        double predict = std::exp(-c1 * std::sqrt(static_cast<double>(pm)) / n14);
        double ratio = std::abs(std::log(eta / predict));
        if (ratio < std::abs(std::log(100.0))) keep.emplace_back(pm, eta);
    }
    out.fitted_c = keep.size() >= 3 ? fit(keep) : c1;
    return out;
}

inline std::string curve_report(const PrecisionCurve& c) {
    std::ostringstream os;
    for (auto& [pm, eta] : c.points) {
        char buf[64];
        snprintf(buf, sizeof buf, "%.6e", eta);
        os << pm << " " << buf << "\n";
    }
    char buf[64];
    snprintf(buf, sizeof buf, "%.4f", c.fitted_c);
    os << "fitted_c=" << buf << "\n";
    return os.str();
}

// --- Sign / conductor search ----------------------------------------------------------

struct SearchEntry {
    long N;
    int epsilon;
    size_t bad_index;
    double eta;
};

inline std::vector<SearchEntry> search_sign_conductor(
    const std::map<long, EulerFactor>& good, const std::vector<long>& candidate_N,
    const std::vector<std::vector<BadEulerFactor>>& candidate_bad, long pmax,
    const FeqConfig& cfg = {}) {
    std::vector<SearchEntry> out;
    for (long N : candidate_N) {
        for (int eps : {+1, -1}) {
            for (size_t bi = 0; bi < std::max<size_t>(candidate_bad.size(), 1); ++bi) {
                LFunctionSpec spec;
                spec.N = N;
                spec.epsilon = eps;
                spec.pmax = pmax;
                if (bi < candidate_bad.size())
                    for (auto& b : candidate_bad[bi]) spec.bad.emplace(b.p, b);
                for (auto& [p, f] : good)
                    if (p <= pmax && spec.bad.count(p) == 0) spec.good.emplace(p, f);
                bool valid = true;
                for (long p : primes_up_to(pmax))
                    if (spec.good.count(p) + spec.bad.count(p) != 1) valid = false;
                if (!valid) continue;
                FeqResult r = check_feq(spec, cfg);
                out.push_back({N, eps, bi, r.eta});
            }
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SearchEntry& a, const SearchEntry& b) { return a.eta < b.eta; });
    return out;
}

}  // namespace eulerfactory

#endif
