#pragma once

// Independent reference computations for the test suites: finite differences,
// brute-force enumeration and random problem generators. Nothing here calls
// the curvature or simplification code under test.

#include <jetc/jetc.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using jetc::Binding;
using jetc::Expr;

// Fourth-order central difference of f along `var`.
inline double central_diff(const std::function<double(const Binding&)>& f, Binding at, const std::string& var,
                           double h = 1e-3) {
    double x = at[var];
    auto at_offset = [&](double d) {
        at[var] = x + d;
        return f(at);
    };
    return (-at_offset(2 * h) + 8 * at_offset(h) - 8 * at_offset(-h) + at_offset(-2 * h)) / (12 * h);
}

inline double central_diff(const Expr& e, const Binding& at, const std::string& var, double h = 1e-3) {
    return central_diff([&](const Binding& b) { return jetc::eval(e, b); }, at, var, h);
}

// Total derivative along the connection assembled numerically:
// d/dx^r e + sum_u de/du * c_{u,r}, all partials by finite differences.
inline double fd_connection_derivative(const jetc::Connection& conn, const Expr& e, const Binding& at, int r) {
    const jetc::JetSpace& s = conn.space();
    double v = central_diff(e, at, s.base_names()[std::size_t(r - 1)]);
    const auto& fiber = s.fiber_coordinates();
    for (std::size_t f = 0; f < fiber.size(); ++f)
        v += central_diff(e, at, s.coordinate_name(fiber[f])) * jetc::eval(conn.coefficient(f, r), at);
    return v;
}

// R_(r,j) for fiber slot f per the alternation D_j c_r - D_r c_j.
inline double fd_curvature(const jetc::Connection& conn, std::size_t f, int r, int j, const Binding& at) {
    return fd_connection_derivative(conn, conn.coefficient(f, r), at, j) -
           fd_connection_derivative(conn, conn.coefficient(f, j), at, r);
}

// Number of non-decreasing sequences of length k over {1..n}, by enumerating
// every n^k tuple.
inline std::size_t count_sorted_tuples(int n, int k) {
    std::size_t total = 1;
    for (int i = 0; i < k; ++i) total *= std::size_t(n);
    std::size_t count = 0;
    std::vector<int> t(static_cast<std::size_t>(k));
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (int i = 0; i < k; ++i) {
            t[std::size_t(i)] = int(c % std::size_t(n));
            c /= std::size_t(n);
        }
        if (std::is_sorted(t.begin(), t.end())) ++count;
    }
    return count;
}

inline std::size_t brute_force_jet_dimension(int n, int m, int k) {
    std::size_t d = std::size_t(n);
    for (int order = 0; order <= k; ++order) d += std::size_t(m) * count_sorted_tuples(n, order);
    return d;
}

inline Binding random_point(const std::vector<std::string>& vars, std::mt19937_64& rng, double lo = -1.5,
                            double hi = 1.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    Binding b;
    for (const std::string& v : vars) b[v] = u(rng);
    return b;
}

// Sum of up to `terms` monomials of total degree <= degree with small integer
// coefficients.
inline Expr random_polynomial(const std::vector<std::string>& vars, int degree, std::mt19937_64& rng, int terms = 4) {
    std::uniform_int_distribution<int> coef(-3, 3), deg(0, degree), pick(0, int(vars.size()) - 1);
    Expr sum = Expr::integer(0);
    for (int t = 0; t < terms; ++t) {
        int c = coef(rng);
        if (c == 0) continue;
        Expr mono = Expr::integer(c);
        int d = deg(rng);
        for (int i = 0; i < d; ++i) mono = mono * Expr::var(vars[std::size_t(pick(rng))]);
        sum = sum + mono;
    }
    return sum;
}

// Order-0 connection with polynomial coefficients over all of E.
inline jetc::Connection random_connection(int n, int m, std::mt19937_64& rng, int degree = 2) {
    jetc::JetSpace s = jetc::JetSpace::standard(n, m, 0);
    std::vector<Expr> c;
    for (std::size_t f = 0; f < s.fiber_coordinates().size(); ++f)
        for (int j = 1; j <= n; ++j) c.push_back(random_polynomial(s.coordinates(), degree, rng));
    return jetc::Connection(s, c, "random");
}

// Geometric connection on J^k with random polynomial tops.
inline jetc::Connection random_geometric(int n, int m, int k, std::mt19937_64& rng, int degree = 2) {
    jetc::JetSpace s = jetc::JetSpace::standard(n, m, k);
    std::map<std::pair<int, jetc::MultiIndex>, Expr> tops;
    for (int a = 0; a < m; ++a)
        for (const jetc::MultiIndex& sigma : jetc::multi_indices(n, std::size_t(k + 1)))
            tops[{a, sigma}] = random_polynomial(s.coordinates(), degree, rng);
    return jetc::make_geometric(jetc::GeometricSpec(s, tops), "random-geometric");
}

// Flat order-0 connections built from a potential: c_j = y * d_j psi(x),
// so that y = C exp(psi) solves every equation.
inline jetc::Connection random_flat_connection(int n, std::mt19937_64& rng) {
    jetc::JetSpace s = jetc::JetSpace::standard(n, 1, 0);
    std::vector<std::string> base = s.base_names();
    Expr psi = random_polynomial(base, 3, rng, 5);
    std::vector<Expr> c;
    for (int j = 1; j <= n; ++j) c.push_back(jetc::simplify(Expr::var("y") * jetc::diff(psi, base[std::size_t(j - 1)])));
    return jetc::Connection(s, c, "flat");
}

// Geometric k=1 connection whose tops are the Hessian of a fixed function of
// x plus nothing from the fiber: y = phi(x) + affine solves it, so it is flat.
inline jetc::Connection random_flat_geometric(int n, std::mt19937_64& rng) {
    jetc::JetSpace s = jetc::JetSpace::standard(n, 1, 1);
    std::vector<std::string> base = s.base_names();
    Expr phi = random_polynomial(base, 4, rng, 5);
    std::map<std::pair<int, jetc::MultiIndex>, Expr> tops;
    for (const jetc::MultiIndex& sigma : jetc::multi_indices(n, 2)) {
        auto e = sigma.entries();
        tops[{0, sigma}] = jetc::diff(jetc::diff(phi, base[std::size_t(e[0] - 1)]), base[std::size_t(e[1] - 1)]);
    }
    return jetc::make_geometric(jetc::GeometricSpec(s, tops), "flat-geometric");
}

// Random expression trees over `vars` using every operator the grammar knows.
class ExprFuzzer {
public:
    ExprFuzzer(std::vector<std::string> vars, std::uint64_t seed) : vars_(std::move(vars)), rng_(seed) {}

    Expr next(int depth = 4) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 12);
        switch (pick(rng_)) {
            case 0: {
                std::uniform_int_distribution<int> c(-5, 5);
                std::uniform_int_distribution<int> q(1, 4);
                int den = q(rng_);
                return den == 1 ? Expr::integer(c(rng_)) : Expr::constant(jetc::Number::rational(c(rng_), den));
            }
            case 1: {
                std::uniform_int_distribution<int> v(0, int(vars_.size()) - 1);
                return Expr::var(vars_[std::size_t(v(rng_))]);
            }
            case 2: return next(depth - 1) + next(depth - 1);
            case 3: return next(depth - 1) - next(depth - 1);
            case 4: return next(depth - 1) * next(depth - 1);
            case 5: return next(depth - 1) / (Expr::integer(3) + jetc::pow(next(depth - 1), 2));
            case 6: return -next(depth - 1);
            case 7: {
                std::uniform_int_distribution<int> e(0, 3);
                return jetc::pow(next(depth - 1), e(rng_));
            }
            case 8: return jetc::sin(next(depth - 1));
            case 9: return jetc::cos(next(depth - 1));
            case 10: return jetc::exp(jetc::sin(next(depth - 1)));
            case 11: return jetc::log(Expr::integer(2) + jetc::pow(next(depth - 1), 2));
            default: return jetc::sqrt(Expr::integer(1) + jetc::pow(next(depth - 1), 2));
        }
    }

private:
    std::vector<std::string> vars_;
    std::mt19937_64 rng_;
};

}  // namespace oracle
