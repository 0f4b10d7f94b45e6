#include <doctest.h>

#include <eulerfactory/padic.hpp>

using namespace eulerfactory;

TEST_CASE("series invert: geometric series") {
    PadicContext cx(7, 4, 2);
    TruncatedSeries s(cx, 5);
    s.c[0] = 1;
    s.c[1] = 1;  // 1 + t
    auto inv = s.invert_unit();
    // 1 - t + t^2 - t^3 + t^4
    CHECK(inv.integral_coeff(0, 4) == 1);
    CHECK(inv.integral_coeff(1, 4) == cx.reduce(-1) % pow_ui(mpz_class(7), 4));
    CHECK(inv.integral_coeff(2, 4) == 1);
    CHECK(inv.integral_coeff(3, 4) == pow_ui(mpz_class(7), 4) - 1);
    auto prod = s * inv;
    CHECK(prod.integral_coeff(0, 4) == 1);
    for (size_t n = 1; n < 5; ++n) CHECK(prod.integral_coeff(n, 4) == 0);
}

TEST_CASE("series theta and compose t^p") {
    PadicContext cx(3, 4, 2);
    TruncatedSeries s(cx, 3);
    s.c[0] = 1;
    s.c[1] = 3;
    s.c[2] = 5;
    auto th = s.theta_copy();
    CHECK(th.integral_coeff(0, 4) == 0);
    CHECK(th.integral_coeff(1, 4) == 3);
    CHECK(th.integral_coeff(2, 4) == 10);
    TruncatedSeries u(cx, 2);
    u.c[0] = 1;
    u.c[1] = 1;
    auto comp = u.compose_tp(3, 4);
    CHECK(comp.integral_coeff(0, 4) == 1);
    CHECK(comp.integral_coeff(1, 4) == 0);
    CHECK(comp.integral_coeff(2, 4) == 0);
    CHECK(comp.integral_coeff(3, 4) == 1);
}

TEST_CASE("scaled arithmetic tracks precision honestly") {
    PadicContext cx(5, 4, 6);  // W = 10
    TruncatedSeries a(cx, 2);
    a.c[0] = 7;
    a.mul_p_power(-2);  // value 7/25
    CHECK(a.v == 2);
    CHECK(a.abs == cx.W - 2);
    TruncatedSeries b(cx, 2);
    b.c[0] = 18;
    auto s = a + b;  // 7/25 + 18
    CHECK(s.v == 2);
    // value * 25 = 7 + 450
    CHECK(s.c[0] == 457);
    auto m = a * b;
    CHECK(m.v == 2);
    CHECK(m.abs == cx.W - 2);
}

TEST_CASE("normalize strips representation-level p powers") {
    PadicContext cx(5, 4, 6);
    TruncatedSeries a(cx, 2);
    a.c[0] = 50;
    a.c[1] = 25;
    a.mul_p_power(-2);
    a.normalize();
    CHECK(a.v == 0);
    CHECK(a.c[0] == 2);
    CHECK(a.c[1] == 1);
}

TEST_CASE("teichmueller examples and fixed-point property") {
    PadicContext cx5(5, 4, 0);
    CHECK(teichmueller(mpq_class(1), cx5) == 1);
    CHECK(teichmueller(mpq_class(-1), cx5) == cx5.pW - 1);
    mpz_class mu = teichmueller(mpq_class(2), cx5);
    CHECK(mu % 5 == 2);
    CHECK(mod_pow(mu, mpz_class(4), cx5.pW) == 1);  // unique 4th root of unity === 2 (mod 5)
    CHECK(mod_pow(mu, cx5.p, cx5.pW) == mu);

    for (long p : {3L, 7L, 13L}) {
        PadicContext cx(p, 4, 3);
        for (long a = 1; a < p; ++a) {
            mpz_class t = teichmueller(mpz_class(a), cx);
            CHECK(mod_pow(t, mpz_class(p - 1), cx.pW) == 1);
            CHECK(t % p == a);
        }
    }
    CHECK_THROWS_AS(teichmueller(mpq_class(5), cx5), Error);
}

TEST_CASE("bernoulli numbers") {
    auto b = bernoulli_numbers(12);
    CHECK(b[0] == 1);
    CHECK(b[1] == mpq_class(-1, 2));
    CHECK(b[2] == mpq_class(1, 6));
    CHECK(b[4] == mpq_class(-1, 30));
    CHECK(b[10] == mpq_class(5, 66));
    CHECK(b[12] == mpq_class(-691, 2730));
    CHECK(b[3] == 0);
}

TEST_CASE("zeta_p3: conductor p vs p^2 agreement (mandatory oracle)") {
    for (long p : {5L, 7L, 11L, 13L}) {
        for (int k : {1, 2, 3}) {
            mpz_class z1 = zeta_p3(mpz_class(p), k, 1);
            mpz_class z2 = zeta_p3(mpz_class(p), k, 2);
            CHECK(z1 == z2);
        }
    }
}

TEST_CASE("zeta_p3 matches B_{p-3}/3 mod p") {
    // classical congruence zeta_p(3) === B_{p-3}/3 (mod p), computed here from exact
    // Bernoulli numbers as an independent route
    for (long p : {5L, 7L, 11L, 13L, 17L}) {
        auto b = bernoulli_numbers(static_cast<int>(p) - 3);
        mpq_class expect_q = b[static_cast<size_t>(p - 3)] / 3;
        mpz_class pp(p);
        mpz_class expect = expect_q.get_num() % pp * mod_inv(expect_q.get_den() % pp, pp) % pp;
        if (expect < 0) expect += pp;
        CHECK(zeta_p3(pp, 1) == expect);
    }
}

TEST_CASE("zeta_p3 rejects unsupported input") {
    CHECK_THROWS_AS(zeta_p3(mpz_class(3), 1), Error);
    CHECK_THROWS_AS(zeta_p3(mpz_class(5), 0), Error);
}
