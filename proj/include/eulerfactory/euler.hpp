#ifndef EULERFACTORY_EULER_HPP
#define EULERFACTORY_EULER_HPP

#include <eulerfactory/umatrix.hpp>

#include <atomic>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace eulerfactory {

// Good-prime Euler factor 1 + a T + b p T^2 + a p^3 T^3 + p^6 T^4.
struct EulerFactor {
    long p = 0;
    mpz_class alpha;
    mpz_class beta;
    enum class Source { computed, imported } source = Source::computed;
};

// Lower-degree bad-prime factor with constant term 1: 1 + c1 T + c2 T^2 + c3 T^3.
struct BadEulerFactor {
    long p = 0;
    std::array<mpz_class, 4> coeffs;  // c0 (= 1), c1, c2, c3
};

// --- Weil/RH root filter ---------------------------------------------------------

// All reciprocal roots of 1 + aT + bpT^2 + ap^3T^3 + p^6T^4 must have modulus p^{3/2}.
// Palindromic reduction: with u = reciprocal root / p^{3/2}, v = u + 1/u satisfies
// v^2 + (a/p^{3/2}) v + (b/p^2 - 2) = 0; accept iff every |u| is within tol of 1.
inline double weil_root_deviation(const mpz_class& alpha, const mpz_class& beta, long p) {
    double p32 = std::pow(static_cast<double>(p), 1.5);
    double a = alpha.get_d() / p32;
    double b = beta.get_d() / (static_cast<double>(p) * static_cast<double>(p));
    std::complex<double> disc = std::complex<double>(a * a - 4.0 * (b - 2.0), 0.0);
    std::complex<double> sq = std::sqrt(disc);
    double worst = 0.0;
    for (int sgn = -1; sgn <= 1; sgn += 2) {
        std::complex<double> v = (-a + static_cast<double>(sgn) * sq) / 2.0;
        std::complex<double> s2 = std::sqrt(v * v - 4.0);
        for (int s = -1; s <= 1; s += 2) {
            std::complex<double> u = (v + static_cast<double>(s) * s2) / 2.0;
            worst = std::max(worst, std::abs(std::abs(u) - 1.0));
        }
    }
    return worst;
}

inline bool weil_root_test(const mpz_class& alpha, const mpz_class& beta, long p,
                           double tol = 1e-9) {
    return weil_root_deviation(alpha, beta, p) <= tol;
}

// --- Integer lifting under Weil bounds -------------------------------------------

// Lifts c1bar = alpha mod p^m and c2bar = beta*p mod p^m to integers inside the Weil
// boxes |alpha| <= 4 p^{3/2}, |beta p| <= 6 p^3; the root filter must leave exactly one.
inline std::pair<mpz_class, mpz_class> lift_coefficients(const mpz_class& c1bar,
                                                         const mpz_class& c2bar,
                                                         long p, int m) {
    mpz_class pm = pow_ui(mpz_class(p), static_cast<unsigned long>(m));
    double p32 = std::pow(static_cast<double>(p), 1.5);
    mpz_class abound(static_cast<long>(4.0 * p32) + 1);
    mpz_class bbound = 6 * mpz_class(p) * p * p + p;
    auto centered_candidates = [&](const mpz_class& residue, const mpz_class& bound) {
        std::vector<mpz_class> out;
        mpz_class r = residue % pm;
        if (r < 0) r += pm;
        // smallest representative >= -bound
        mpz_class start = r - pm * ((r + bound) / pm + 1);
        for (mpz_class x = start; x <= bound; x += pm)
            if (x >= -bound) out.push_back(x);
        return out;
    };
    std::vector<std::pair<mpz_class, mpz_class>> survivors;
    for (const auto& a : centered_candidates(c1bar, abound)) {
        for (const auto& bp : centered_candidates(c2bar, bbound)) {
            if (bp % p != 0) continue;
            mpz_class b = bp / p;
            if (weil_root_test(a, b, p)) survivors.emplace_back(a, b);
        }
    }
    if (survivors.empty())
        throw verification_error("lift-empty: no Weil-consistent lift at p=" + std::to_string(p) +
                                 ", m=" + std::to_string(m));
    if (survivors.size() > 1)
        throw precision_error("lift-ambiguous: " + std::to_string(survivors.size()) +
                              " Weil-consistent lifts at p=" + std::to_string(p) +
                              ", m=" + std::to_string(m));
    return survivors.front();
}

// --- Engine driver ----------------------------------------------------------------

// Auto-precision policy: m = 4 for p >= 13; 5 for p in {7, 11}; 6 for {3, 5}; 7 for 2.
inline int precision_policy(long p) {
    if (p >= 13) return 4;
    if (p >= 7) return 5;
    if (p >= 3) return 6;
    return 7;
}

// Working-guard heuristic: genuine denominator depth of the basis grows like a few
// multiples of log_p(n_max), and the E / E^{-1} products roughly double it.
inline int auto_guard(long p, int n_max) {
    double logp = std::log(static_cast<double>(std::max(n_max, 2)) * 6.0) /
                  std::log(static_cast<double>(p));
    return static_cast<int>(14 * std::ceil(logp)) + 26;
}

struct EngineOutput {
    mpz_class x;
    long x_digits = 0;
    RationalUMatrix cleared;
    int n_max = 0;
    int m = 4;
};

// Single engine pass at a fixed order: solve, calibrate by integrality, refine the
// remaining digits of x through the rationality of the deep layers, clear denominators.
inline EngineOutput engine_pass(const CalabiYauOperator& op, const PadicContext& ctx, int n_max,
                                const Discriminant& disc, int delta_max = 4) {
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
    SeriesMatrix U = u_series_at(parts, acc.x0);
    std::vector<std::vector<mpz_class>> u_int(16);
    for (int e = 0; e < 16; ++e) {
        TruncatedSeries& s = U.e[static_cast<size_t>(e)];
        s.normalize();
        if (s.v > 0)
            throw verification_error("calibrate_x: verification failed, entry not integral");
        u_int[static_cast<size_t>(e)].resize(static_cast<size_t>(n_max));
        for (int n = 0; n < n_max; ++n)
            u_int[static_cast<size_t>(e)][static_cast<size_t>(n)] =
                s.integral_coeff(static_cast<size_t>(n), ctx.m);
    }
    // K' = K / p^3 as integer tables mod p^{m-3}; absent when K is not integral there
    // (in that case the integrality congruences already pinned the digits in question).
    std::vector<std::vector<mpz_class>> kp(16);
    bool have_kprime = ctx.m > 3;
    if (have_kprime) {
        try {
            for (int e = 0; e < 16; ++e) {
                TruncatedSeries ks = parts.K.e[static_cast<size_t>(e)];
                ks.mul_p_power(-3);
                ks.normalize();
                kp[static_cast<size_t>(e)].resize(static_cast<size_t>(n_max));
                for (int n = 0; n < n_max; ++n)
                    kp[static_cast<size_t>(e)][static_cast<size_t>(n)] =
                        ks.integral_coeff(static_cast<size_t>(n), ctx.m - 3);
            }
        } catch (const Error&) {
            have_kprime = false;
        }
    }
    ClearOutput cleared = clear_denominators_core(u_int, n_max, disc, ctx, delta_max,
                                                  have_kprime ? &kp : nullptr, acc.x0, acc.digits);
    EngineOutput out;
    out.x = cleared.x;
    out.x_digits = std::max(cleared.x_digits, acc.digits);
    out.cleared = std::move(cleared.R);
    out.n_max = n_max;
    out.m = ctx.m;
    return out;
}

// Full per-prime pipeline with stabilization certification: an independent rerun at a
// strictly larger order must reproduce x, every delta_i, and every V_i.
inline EngineOutput run_engine(const CalabiYauOperator& op, long p, int m,
                               int guard_floor = 2) {
    if (m < 4) throw input_error("engine: m >= 4 required");
    Discriminant disc = discriminant(op);
    int degD = std::max<int>(1, static_cast<int>(disc.degree()));
    int delta_guess = 2;
    int tail_len = static_cast<int>(p) * degD + 2 + 4 * degD + 2;
    // deep layers carry Delta exponents growing with the layer and degrees of order
    // p*degD*(layers); start generously and let the stabilization loop double on demand
    int n_max = std::max({static_cast<int>(p) * delta_guess * degD + 8 * degD,
                          static_cast<int>(p) * degD * (m + 3) + 24 * degD + 16,
                          2 * tail_len + 10});
    int delta_max = std::max(4, m + 1);  // deep layers at tiny primes reach delta ~ layer + 1
    const int kMaxDigits = 4096;
    for (int order_try = 0; order_try < 5; ++order_try) {
        int guard = std::max(auto_guard(p, 2 * n_max), guard_floor);
        bool enlarge_order = false;
        while (!enlarge_order) {
            if (m + guard > kMaxDigits)
                throw precision_error("engine: working precision exceeds hard cap at p=" +
                                      std::to_string(p));
            try {
                PadicContext ctx(mpz_class(p), m, guard);
                EngineOutput r1 = engine_pass(op, ctx, n_max, disc, delta_max);
                int n2 = n_max + static_cast<int>(p) * degD;
                EngineOutput r2 = engine_pass(op, ctx, n2, disc, delta_max);
                // Stabilization certificate: identical Delta exponents, agreeing pinned
                // x digits, and identical evaluations at the Teichmueller units. (The V
                // polynomials themselves are compared by value: at small primes the deep
                // layers carry p-adically negligible non-rational tails whose truncation
                // depends on the order, while the evaluated matrix is what the Euler
                // factors consume and must be order-independent.)
                bool stable = r1.cleared.delta == r2.cleared.delta;
                long common = std::min(r1.x_digits, r2.x_digits);
                if (stable && common > 0 &&
                    (r1.x - r2.x) % pow_ui(mpz_class(p), static_cast<unsigned long>(common)) != 0)
                    stable = false;
                if (stable) {
                    PadicContext cx(mpz_class(p), m, 2);
                    mpz_class pm = pow_ui(mpz_class(p), static_cast<unsigned long>(m));
                    long sample = std::min<long>(p - 1, 24);
                    for (long a = 1; a <= sample && stable; ++a) {
                        if (eval_mod(disc.poly, mpz_class(a), mpz_class(p)) % p == 0) continue;
                        mpz_class mu = teichmueller(mpz_class(a), cx) % pm;
                        auto U1 = evaluate_rational_u(r1.cleared, disc, mu);
                        auto U2 = evaluate_rational_u(r2.cleared, disc, mu);
                        for (int e = 0; e < 16; ++e)
                            if (U1[static_cast<size_t>(e)] != U2[static_cast<size_t>(e)]) {
                                stable = false;
                                break;
                            }
                    }
                }
                if (!stable) break;  // enlarge order
                return r2;
            } catch (const Error& e) {
                if (e.cls != ErrorClass::precision) throw;
                if (std::string(e.what()).find("order-insufficient") != std::string::npos)
                    enlarge_order = true;
                else
                    guard = guard * 3 / 2 + 8;
            }
        }
        n_max *= 2;
    }
    throw verification_error("engine: no stabilization within the order budget at p=" +
                             std::to_string(p));
}

// --- Per-prime classification -----------------------------------------------------

struct PrimeStatus {
    enum class Kind { good, bad, skipped } kind;
    std::string reason;  // for bad/skipped
};

inline PrimeStatus classify_prime(const CalabiYauOperator& op, const mpq_class& t0, long p) {
    mpz_class pz(p);
    if (op.denominator_lcm() % pz == 0)
        return {PrimeStatus::Kind::skipped, "divides-operator-denominator"};
    if (valuation_q(t0, pz) != 0) return {PrimeStatus::Kind::skipped, "t0-not-p-unit"};
    Discriminant disc = discriminant(op);
    mpq_class dval = eval_q(disc.poly, t0);
    if (dval == 0 || valuation_q(dval, pz) > 0) return {PrimeStatus::Kind::bad, "discriminant-vanishes"};
    return {PrimeStatus::Kind::good, ""};
}

// --- Euler factor at a parameter --------------------------------------------------

inline EulerFactor euler_factor_at(const CalabiYauOperator& op, const mpq_class& t0, long p,
                                   int m_override = 0) {
    PrimeStatus st = classify_prime(op, t0, p);
    if (st.kind != PrimeStatus::Kind::good)
        throw input_error("bad-prime-requested: p=" + std::to_string(p) + " is " +
                          (st.kind == PrimeStatus::Kind::bad ? "bad" : "skipped") + " (" +
                          st.reason + ")");
    Discriminant disc = discriminant(op);
    int m = m_override > 0 ? m_override : precision_policy(p);
    const int kMaxEscalations = 6;
    for (int attempt = 0;; ++attempt) {
        EngineOutput eng = run_engine(op, p, m);
        PadicContext cx(mpz_class(p), m, 2);
        mpz_class mu = teichmueller(t0, cx);
        mpz_class pm = pow_ui(mpz_class(p), static_cast<unsigned long>(m));
        auto U = evaluate_rational_u(eng.cleared, disc, mu % pm);
        auto c = charpoly_reciprocal(U, pm);
        // functional-equation symmetry mod p^m before lifting
        mpz_class p3 = mpz_class(p) * p * p;
        mpz_class p6 = p3 * p3;
        if ((c[2] - c[0] * p3) % pm != 0 || (c[3] - p6) % pm != 0)
            throw verification_error("symmetry-violation: charpoly is not symplectic at p=" +
                                     std::to_string(p));
        try {
            auto [alpha, beta] = lift_coefficients(c[0], c[1], p, m);
            EulerFactor f;
            f.p = p;
            f.alpha = alpha;
            f.beta = beta;
            f.source = EulerFactor::Source::computed;
            return f;
        } catch (const Error& e) {
            if (e.cls == ErrorClass::precision && attempt < kMaxEscalations) {
                ++m;
                continue;
            }
            throw;
        }
    }
}

// --- Dwork / Hasse-Witt congruence ------------------------------------------------

// Truncated holomorphic solution A_{<p}(t0) evaluated in F_p.
inline mpz_class holomorphic_truncation_mod_p(const CalabiYauOperator& op, const mpq_class& t0,
                                              long p) {
    mpz_class pz(p);
    std::vector<mpz_class> c(static_cast<size_t>(p));
    c[0] = 1;
    for (long n = 1; n < p; ++n) {
        mpz_class s = 0;
        for (int i = 1; i <= std::min<long>(n, op.degree_r); ++i) {
            mpq_class v = op.p_at(i, mpq_class(n - i));
            mpz_class vz = v.get_num() % pz * mod_inv(v.get_den() % pz, pz) % pz;
            s += vz * c[static_cast<size_t>(n - i)];
        }
        s %= pz;
        mpz_class inv = mod_inv(mod_pow(mpz_class(n), mpz_class(4), pz), pz);
        c[static_cast<size_t>(n)] = ((-s * inv) % pz + pz) % pz;
    }
    mpz_class t = t0.get_num() % pz * mod_inv(t0.get_den() % pz, pz) % pz;
    mpz_class acc = 0, tp = 1;
    for (long n = 0; n < p; ++n) {
        acc = (acc + c[static_cast<size_t>(n)] * tp) % pz;
        tp = tp * t % pz;
    }
    if (acc < 0) acc += pz;
    return acc;
}

// Discovers the sign sigma with alpha_p === sigma * A_{<p}(t0) (mod p) across factors.
// Returns 0 if no consistent sign exists.
inline int discover_dwork_sign(const CalabiYauOperator& op, const mpq_class& t0,
                               const std::vector<EulerFactor>& factors) {
    bool plus_ok = true, minus_ok = true;
    for (const auto& f : factors) {
        mpz_class pz(f.p);
        mpz_class hw = holomorphic_truncation_mod_p(op, t0, f.p);
        mpz_class am = f.alpha % pz;
        if (am < 0) am += pz;
        if (am != hw) plus_ok = false;
        if (am != (pz - hw) % pz) minus_ok = false;
        if (!plus_ok && !minus_ok) return 0;
    }
    if (plus_ok) return 1;
    if (minus_ok) return -1;
    return 0;
}

// --- Batch computation -------------------------------------------------------------

struct BatchEntry {
    long p = 0;
    PrimeStatus::Kind kind = PrimeStatus::Kind::skipped;
    std::string reason;
    EulerFactor factor;  // valid when kind == good
    std::string error;   // per-prime failure (batch continues)
};

inline std::vector<BatchEntry> batch_compute(const CalabiYauOperator& op, const mpq_class& t0,
                                             long pmax, int jobs = 0, int m_override = 0) {
    auto primes = primes_up_to(pmax);
    std::vector<BatchEntry> out(primes.size());
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(primes.size())));
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t idx = next.fetch_add(1);
            if (idx >= primes.size()) return;
            long p = primes[idx];
            BatchEntry& e = out[idx];
            e.p = p;
            PrimeStatus st = classify_prime(op, t0, p);
            e.kind = st.kind;
            e.reason = st.reason;
            if (st.kind != PrimeStatus::Kind::good) continue;
            try {
                e.factor = euler_factor_at(op, t0, p, m_override);
            } catch (const Error& err) {
                e.kind = PrimeStatus::Kind::skipped;
                e.reason = "error";
                e.error = err.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

// --- Persistence -------------------------------------------------------------------

// Store format, one line per prime in increasing order:
//   p alpha beta            (good)
//   p bad c0 c1 c2 c3       (imported bad factor)
//   p skip <reason>         (anything else)
inline std::string store_line(const BatchEntry& e) {
    std::ostringstream os;
    if (e.kind == PrimeStatus::Kind::good)
        os << e.p << " " << e.factor.alpha.get_str() << " " << e.factor.beta.get_str();
    else if (e.kind == PrimeStatus::Kind::bad)
        os << e.p << " skip bad-prime:" << e.reason;
    else
        os << e.p << " skip " << (e.reason.empty() ? "unknown" : e.reason);
    return os.str();
}

inline std::vector<EulerFactor> read_factor_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw input_error("cannot open factor file " + path);
    std::vector<EulerFactor> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long p;
        std::string a, b;
        if (!(ls >> p >> a >> b)) continue;
        if (a == "skip" || a == "bad") continue;
        EulerFactor f;
        f.p = p;
        f.alpha = mpz_class(a);
        f.beta = mpz_class(b);
        f.source = EulerFactor::Source::imported;
        out.push_back(f);
    }
    return out;
}

// Bad-factor files: lines `p c3 c2 c1` with product/power syntax, constant term 1.
inline std::vector<BadEulerFactor> read_bad_factors(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw input_error("cannot open bad-factor file " + path);
    std::vector<BadEulerFactor> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        long p;
        std::string c3, c2, c1;
        if (!(ls >> p >> c3 >> c2 >> c1)) throw input_error("malformed bad-factor line: " + line);
        BadEulerFactor b;
        b.p = p;
        b.coeffs[0] = 1;
        b.coeffs[1] = parse_int_expr(c1);
        b.coeffs[2] = parse_int_expr(c2);
        b.coeffs[3] = parse_int_expr(c3);
        out.push_back(b);
    }
    return out;
}

}  // namespace eulerfactory

#endif
