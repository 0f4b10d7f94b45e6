#include <doctest.h>

#include <eulerfactory/lfunction.hpp>

#include "mellin_oracle.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <fstream>

using namespace eulerfactory;

namespace {

const std::string kDataDir = EULERFACTORY_DATA_DIR;

LFunctionSpec spec61(long pmax) {
    LFunctionSpec s;
    s.N = 61;
    s.epsilon = +1;
    s.pmax = pmax;
    for (auto& f : read_factor_lines(kDataDir + "/fixtures/cond61.factors"))
        if (f.p <= pmax) s.good.emplace(f.p, f);
    for (auto& b : read_bad_factors(kDataDir + "/fixtures/cond61.bad"))
        if (b.p <= pmax) s.bad.emplace(b.p, b);
    return s;
}

}  // namespace

TEST_CASE("besselk1 agrees with a double-precision reference") {
    for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 60.0, 90.0}) {
        double mine = besselk1(Real::of(x, 128), 128).to_double();
        double ref = boost::math::cyl_bessel_k(1, x);
        CHECK(std::abs(mine - ref) <= 1e-13 * std::abs(ref));
    }
}

TEST_CASE("besselk1 high-precision consistency across the series/asymptotic crossover") {
    // the crossover point depends on the output precision; evaluate the same x both ways
    double x = 40.0;
    Real lo = besselk1(Real::of(x, 100), 100);   // asymptotic branch (crossover ~ 41)
    Real hi = besselk1(Real::of(x, 400), 400);   // series branch (crossover ~ 145)
    double rel = std::abs((lo - hi.with_prec(100)).to_double() / hi.to_double());
    CHECK(rel < 1e-28);
}

TEST_CASE("gamma_kernel closed form vs numerical Mellin inversion (mandated oracle)") {
    for (double x : {0.5, 1.0, 2.0}) {
        double closed = gamma_kernel(Real::of(x, 200), 61, 200).to_double();
        double numeric = mellin_oracle::inverse_mellin_archimedean(x, 61);
        CHECK(std::abs(closed - numeric) <= 1e-10 * std::abs(closed));
    }
}

TEST_CASE("gamma_kernel N-dependence is a pure rescaling: phi_N(x) = phi_1(x/sqrt(N))") {
    for (double x : {0.5, 1.5, 3.0}) {
        double a = gamma_kernel(Real::of(x, 160), 61, 160).to_double();
        double b = gamma_kernel(Real::of(x / std::sqrt(61.0), 160), 1, 160).to_double();
        CHECK(std::abs(a - b) <= 1e-30 + 1e-24 * std::abs(a));
    }
}

TEST_CASE("gamma_kernel positivity, monotone decay, exponential falloff") {
    double prev = 1e300;
    for (double x = 0.5; x < 40.0; x *= 1.5) {
        double v = gamma_kernel(Real::of(x, 96), 61, 96).to_double();
        CHECK(v > 0);
        CHECK(v < prev);
        prev = v;
    }
    // decay like exp(-4 pi sqrt(x) / N^{1/4}) up to algebraic factors
    double v1 = gamma_kernel(Real::of(50.0, 160), 61, 160).to_double();
    double v2 = gamma_kernel(Real::of(200.0, 160), 61, 160).to_double();
    double predicted = std::exp(-4 * 3.14159265358979 * (std::sqrt(200.0) - std::sqrt(50.0)) /
                                std::pow(61.0, 0.25));
    double ratio = v2 / v1;
    CHECK(ratio / predicted > 0.05);
    CHECK(ratio / predicted < 2.0);
    CHECK_THROWS_AS(gamma_kernel(Real::of(-1.0, 96), 61, 96), Error);
}

TEST_CASE("dirichlet coefficients of the conductor-61 spec") {
    auto s = spec61(97);
    auto a = dirichlet_coefficients(s, 12);
    CHECK(a[1] == 1);
    CHECK(a[2] == -7);   // E_2 = 1 + 7T + 24T^2 + 56T^3 + 64T^4
    CHECK(a[4] == 25);   // c1^2 - c2
    CHECK(a[3] == -3);
    CHECK(a[6] == 21);   // multiplicativity
}

TEST_CASE("dirichlet coefficients are multiplicative and vanish beyond pmax") {
    auto s = spec61(97);
    auto a = dirichlet_coefficients(s, 300);
    for (long m = 2; m < 17; ++m)
        for (long n = m + 1; m * n < 300; ++n) {
            mpz_class g;
            mpz_gcd(g.get_mpz_t(), mpz_class(m).get_mpz_t(), mpz_class(n).get_mpz_t());
            if (g != 1) continue;
            CHECK(a[static_cast<size_t>(m * n)] == a[static_cast<size_t>(m)] * a[static_cast<size_t>(n)]);
        }
    CHECK(a[101] == 0);
    CHECK(a[202] == 0);
    CHECK(a[61] != 0);  // bad factor contributes
}

TEST_CASE("check_feq: conductor-61 spec passes at 1e-12; corrupted alpha_7 stagnates") {
    auto s = spec61(97);
    FeqConfig cfg;
    cfg.digits = 30;
    FeqResult r = check_feq(s, cfg);
    MESSAGE("eta(61, pmax=97) = ", r.eta, " tail=", r.tail_bound, " n=", r.n_used);
    CHECK(r.eta <= 1e-12);

    auto bad = s;
    bad.good[7].alpha += 1;
    FeqResult rb = check_feq(bad, cfg);
    MESSAGE("eta(corrupted) = ", rb.eta);
    CHECK(rb.eta >= 1e-6);
}

TEST_CASE("check_feq: wrong sign is catastrophic") {
    auto s = spec61(97);
    s.epsilon = -1;
    FeqConfig cfg;
    cfg.digits = 25;
    FeqResult r = check_feq(s, cfg);
    CHECK(r.eta >= 1e-3);
}

TEST_CASE("check_feq: degenerate N=1 control equals the direct kernel defect") {
    LFunctionSpec s;
    s.N = 1;
    s.epsilon = +1;
    s.pmax = 1;  // no primes: a_1 = 1 only
    FeqConfig cfg;
    cfg.digits = 25;
    FeqResult r = check_feq(s, cfg);
    mpfr_prec_t prec = 120;
    double expect = 0;
    for (double t : cfg.points) {
        Real th = gamma_kernel(Real::of(t, prec), 1, prec);
        Real mi = gamma_kernel(Real::of(1.0 / t, prec), 1, prec) /
                  pow(Real::of(t, prec), Real::of(4L, prec));
        double e = (abs(th - mi) / (abs(th) + abs(mi))).to_double();
        expect = std::max(expect, e);
    }
    CHECK(r.eta == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("check_feq invariant under factor insertion order") {
    auto s = spec61(31);
    LFunctionSpec s2;
    s2.N = s.N;
    s2.epsilon = s.epsilon;
    s2.pmax = s.pmax;
    for (auto it = s.good.rbegin(); it != s.good.rend(); ++it) s2.good.emplace(it->first, it->second);
    s2.bad = s.bad;
    FeqConfig cfg;
    cfg.digits = 20;
    CHECK(check_feq(s, cfg).eta == check_feq(s2, cfg).eta);
}

TEST_CASE("precision_curve on the 61 fixture fits c in [9, 14]") {
    auto s = spec61(199);
    FeqConfig cfg;
    cfg.digits = 40;
    auto curve = precision_curve(s, {29, 61, 97, 149, 199}, cfg);
    MESSAGE(curve_report(curve));
    CHECK(curve.fitted_c >= 9.0);
    CHECK(curve.fitted_c <= 14.0);
    // eta decreases along the grid (up to the tolerated noise band)
    for (size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].second < 10 * curve.points[i - 1].second);
    CHECK_THROWS_AS(precision_curve(s, {61}, cfg), Error);
}

TEST_CASE("precision_curve flattens after a corrupted factor") {
    auto s = spec61(199);
    s.good[29].alpha += 1;  // corrupt an early factor
    FeqConfig cfg;
    cfg.digits = 30;
    auto curve = precision_curve(s, {31, 61, 97, 149}, cfg);
    // eta stagnates: last point within 10x of the second
    double e2 = curve.points[1].second, e4 = curve.points.back().second;
    CHECK(e4 > e2 / 10);
}

TEST_CASE("search_sign_conductor: 61 wins among {59, 61, 64} x {+-1} by 6 orders") {
    auto s = spec61(97);
    std::vector<std::vector<BadEulerFactor>> bads = {
        std::vector<BadEulerFactor>{s.bad.begin()->second}};
    FeqConfig cfg;
    cfg.digits = 30;
    auto ranked = search_sign_conductor(s.good, {59, 61, 64}, bads, 97, cfg);
    REQUIRE(!ranked.empty());
    CHECK(ranked[0].N == 61);
    CHECK(ranked[0].epsilon == +1);
    CHECK(ranked[1].eta / ranked[0].eta >= 1e6);
}

TEST_CASE("search_sign_conductor: the 197 fixture prefers eps = -1") {
    LFunctionSpec s;
    s.N = 197;
    s.pmax = 97;
    std::map<long, EulerFactor> good;
    for (auto& f : read_factor_lines(kDataDir + "/fixtures/cond197.factors"))
        if (f.p <= 97) good.emplace(f.p, f);
    auto bads = read_bad_factors(kDataDir + "/fixtures/cond197.bad");
    FeqConfig cfg;
    cfg.digits = 30;
    auto ranked = search_sign_conductor(good, {197}, {bads}, 97, cfg);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].epsilon == -1);
}

TEST_CASE("ties between identical candidates are preserved in ranking") {
    auto s = spec61(31);
    std::vector<std::vector<BadEulerFactor>> bads = {{}, {}};
    FeqConfig cfg;
    cfg.digits = 15;
    auto ranked = search_sign_conductor(s.good, {61, 61}, bads, 31, cfg);
    REQUIRE(ranked.size() == 8);
    CHECK(ranked[0].eta == ranked[1].eta);  // identical duplicated candidates tie
}
