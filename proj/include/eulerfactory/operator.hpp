#ifndef EULERFACTORY_OPERATOR_HPP
#define EULERFACTORY_OPERATOR_HPP

#include <eulerfactory/polynomial.hpp>
#include <eulerfactory/util.hpp>

#include <array>
#include <sstream>
#include <string>
#include <vector>

namespace eulerfactory {

// A Calabi-Yau operator theta^4 + sum_{i=1..r} t^i P_i(theta) with a MUM point at t = 0.
// coeff[i][j] is the exact rational coefficient of t^i theta^j, 0 <= j <= 4.
struct CalabiYauOperator {
    int degree_r = 0;
    std::vector<std::array<mpq_class, 5>> coeff;  // size degree_r + 1; coeff[0] = theta^4
    std::string label;

    // P_i evaluated at an exact rational point.
    mpq_class p_at(int i, const mpq_class& x) const {
        mpq_class r = 0;
        for (int j = 4; j >= 0; --j) r = r * x + coeff[static_cast<size_t>(i)][static_cast<size_t>(j)];
        return r;
    }

    // Least common denominator of all coefficients.
    mpz_class denominator_lcm() const {
        mpz_class l = 1;
        for (const auto& row : coeff)
            for (const auto& q : row) {
                mpz_class g;
                mpz_gcd(g.get_mpz_t(), l.get_mpz_t(), q.get_den().get_mpz_t());
                l = l / g * q.get_den();
            }
        return l;
    }
};

struct Discriminant {
    Poly<mpz_class> poly;  // primitive integer coefficients, positive constant term

    long degree() const { return poly.degree(); }
};

namespace detail {

inline void enforce_operator_invariants(CalabiYauOperator& op, int line_for_errors) {
    auto& p0 = op.coeff[0];
    if (p0[4] == 0)
        throw input_error("line " + std::to_string(line_for_errors) +
                          ": not a MUM-normalized operator (t^0 part has no theta^4 term)");
    if (p0[4] != 1) {
        mpq_class lead = p0[4];
        for (auto& row : op.coeff)
            for (auto& q : row) q /= lead;
    }
    for (int j = 0; j < 4; ++j)
        if (p0[static_cast<size_t>(j)] != 0)
            throw input_error("line " + std::to_string(line_for_errors) +
                              ": not a MUM-normalized operator (t^0 part is not theta^4)");
}

}  // namespace detail

// Grammar:   operator <label> degree <r>
//            t^<i>: c4 c3 c2 c1 c0        (exact rationals; missing i lines are zero)
inline CalabiYauOperator parse_operator(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    CalabiYauOperator op;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        if (!header_seen) {
            std::string kw, degkw;
            ls >> kw >> op.label >> degkw >> op.degree_r;
            if (kw != "operator" || degkw != "degree" || ls.fail() || op.degree_r < 0)
                throw input_error("line " + std::to_string(lineno) + " col 1: expected header 'operator <label> degree <r>'");
            op.coeff.assign(static_cast<size_t>(op.degree_r) + 1, {mpq_class(0), 0, 0, 0, 0});
            header_seen = true;
            continue;
        }
        std::string head;
        ls >> head;
        if (head.size() < 4 || head.substr(0, 2) != "t^" || head.back() != ':')
            throw input_error("line " + std::to_string(lineno) + " col 1: expected 't^<i>:'");
        int i;
        try {
            i = std::stoi(head.substr(2, head.size() - 3));
        } catch (...) {
            throw input_error("line " + std::to_string(lineno) + " col 3: bad power index");
        }
        if (i < 0 || i > op.degree_r)
            throw input_error("line " + std::to_string(lineno) + ": power t^" + std::to_string(i) +
                              " outside degree " + std::to_string(op.degree_r));
        std::string tok;
        for (int j = 4; j >= 0; --j) {
            if (!(ls >> tok))
                throw input_error("line " + std::to_string(lineno) + ": expected 5 coefficients c4..c0");
            op.coeff[static_cast<size_t>(i)][static_cast<size_t>(j)] = parse_rational(tok);
        }
        if (ls >> tok)
            throw input_error("line " + std::to_string(lineno) + ": trailing token '" + tok + "'");
    }
    if (!header_seen) throw input_error("line 1 col 1: empty operator file");
    detail::enforce_operator_invariants(op, 1);
    return op;
}

inline std::string operator_to_text(const CalabiYauOperator& op) {
    std::ostringstream out;
    out << "operator " << op.label << " degree " << op.degree_r << "\n";
    for (int i = 0; i <= op.degree_r; ++i) {
        out << "t^" << i << ":";
        for (int j = 4; j >= 0; --j)
            out << " " << rational_to_string(op.coeff[static_cast<size_t>(i)][static_cast<size_t>(j)]);
        out << "\n";
    }
    return out.str();
}

// Stirling numbers of the second kind up to theta^4: theta^k = sum_j S(k,j) t^j d^j/dt^j.
inline const int kStirling2[5][5] = {
    {1, 0, 0, 0, 0},
    {0, 1, 0, 0, 0},
    {0, 1, 1, 0, 0},
    {0, 1, 3, 1, 0},
    {0, 1, 7, 6, 1},
};

// Rewrites the operator as sum_k a_k(t) (d/dt)^k; a[k] returned for k = 0..4.
inline std::array<Poly<mpq_class>, 5> to_ddt_form(const CalabiYauOperator& op) {
    std::array<Poly<mpq_class>, 5> a;
    for (int k = 0; k <= 4; ++k) {
        Poly<mpq_class> s;
        s.c.assign(static_cast<size_t>(op.degree_r) + 1, mpq_class(0));
        for (int i = 0; i <= op.degree_r; ++i)
            for (int j = k; j <= 4; ++j)
                s.c[static_cast<size_t>(i)] +=
                    op.coeff[static_cast<size_t>(i)][static_cast<size_t>(j)] * kStirling2[j][k];
        s.trim();
        a[static_cast<size_t>(k)] = s.shifted(static_cast<size_t>(k));
    }
    return a;
}

// a4(t) with the t^4 factor removed, normalized to primitive integer coefficients.
inline Discriminant discriminant(const CalabiYauOperator& op) {
    Poly<mpq_class> delta;
    delta.c.assign(static_cast<size_t>(op.degree_r) + 1, mpq_class(0));
    for (int i = 0; i <= op.degree_r; ++i)
        delta.c[static_cast<size_t>(i)] = op.coeff[static_cast<size_t>(i)][4];
    delta.trim();
    return Discriminant{primitive_part(delta)};
}

// Applies the theta-form operator to t^n; used as the cross-form test oracle.
inline Poly<mpq_class> apply_theta_form(const CalabiYauOperator& op, long n) {
    Poly<mpq_class> r;
    r.c.assign(static_cast<size_t>(n + op.degree_r) + 1, mpq_class(0));
    for (int i = 0; i <= op.degree_r; ++i)
        r.c[static_cast<size_t>(n + i)] += op.p_at(i, mpq_class(n));
    r.trim();
    return r;
}

inline Poly<mpq_class> apply_ddt_form(const std::array<Poly<mpq_class>, 5>& a, long n) {
    Poly<mpq_class> r;
    for (int k = 0; k <= 4; ++k) {
        if (n < k) continue;
        mpq_class fall = 1;  // falling factorial n(n-1)...(n-k+1)
        for (int j = 0; j < k; ++j) fall *= (n - j);
        if (fall == 0) continue;
        Poly<mpq_class> term = a[static_cast<size_t>(k)];
        for (auto& q : term.c) q *= fall;
        r += term.shifted(static_cast<size_t>(n - k));
    }
    r.trim();
    return r;
}

}  // namespace eulerfactory

#endif
