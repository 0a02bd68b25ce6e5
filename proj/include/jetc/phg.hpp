#pragma once

// Prehomogeneous geometries.
//
// A solved-form PDE H^k is the graph y^a_nu = f^a_nu(x, y_{k-1}), |nu| = k.
// An epsilon section extends it to order k+1 by y^a_sigma = g^a_sigma,
// |sigma| = k+1, again as functions on J^{k-1}. The phg curvature of that
// extension is the pair
//
//   connection defect  D^f_j f^a_nu - g^a_{nu+1_j}
//   Frobenius defect   curvature of the reduced first-order system
//
// and its vanishing locus is exactly where the prolongation of eps(H^k)
// surjects onto eps(H^k).

#include <jetc/connection.hpp>
#include <jetc/error.hpp>
#include <jetc/expr.hpp>
#include <jetc/jet_space.hpp>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jetc {

using IndexedExprs = std::map<std::pair<int, MultiIndex>, Expr>;

namespace detail {

inline void require_total(const JetSpace& coords, int n, int m, std::size_t order, const IndexedExprs& table,
                          const std::string& what, const std::vector<std::string>& fibers) {
    for (int a = 0; a < m; ++a) {
        for (const MultiIndex& s : multi_indices(n, order)) {
            auto it = table.find({a, s});
            if (it == table.end())
                throw InvalidSpace("missing " + what + "[" + fibers[std::size_t(a)] + ";" + s.digits() + "]");
            require_vars_in(it->second, coords);
        }
    }
}

}  // namespace detail

class SolvedPde {
public:
    SolvedPde(JetSpace space, IndexedExprs f) : space_(std::move(space)), f_(std::move(f)) {
        if (space_.order() < 1) throw InvalidSpace("a solved PDE needs order k >= 1");
        detail::require_total(lower_space(), space_.n(), space_.m(), std::size_t(space_.order()), f_, "f",
                              space_.fiber_names());
    }

    const JetSpace& space() const { return space_; }  // J^k
    JetSpace lower_space() const { return space_.with_order(space_.order() - 1); }
    int order() const { return space_.order(); }
    const Expr& f(int alpha, const MultiIndex& nu) const { return f_.at({alpha, nu}); }
    const IndexedExprs& table() const { return f_; }

private:
    JetSpace space_;
    IndexedExprs f_;
};

class EpsilonSection {
public:
    EpsilonSection(SolvedPde base, IndexedExprs g) : base_(std::move(base)), g_(std::move(g)) {
        const JetSpace& s = base_.space();
        detail::require_total(base_.lower_space(), s.n(), s.m(), std::size_t(s.order() + 1), g_, "g", s.fiber_names());
    }

    const SolvedPde& base() const { return base_; }
    const Expr& g(int alpha, const MultiIndex& sigma) const { return g_.at({alpha, sigma}); }
    const IndexedExprs& table() const { return g_; }

private:
    SolvedPde base_;
    IndexedExprs g_;
};

// ---------------------------------------------------------------------------
// Order-one phg c(E) and its prolongation

struct ProlongEquation {
    std::string target;  // J^2 coordinate fixed by the equation
    int j = 0;           // differentiated coefficient index (0 for y_j = c_j)
    int k = 0;           // differentiation direction
    Expr rhs;
    Expr residual;       // target - rhs
    std::string label;
};

// Defining equations of rho(c(E)) in J^2(E): y^a_j = c^a_j and, for every
// ordered (j, k), y^a_{jk} = dc^a_j/dx^k + dc^a_j/dy^b c^b_k. Both orders of
// (j, k) name the same canonical coordinate y^a_{jk}.
inline std::vector<ProlongEquation> prolong_equations(const Connection& conn) {
    const JetSpace& space = conn.space();
    if (space.order() != 0) throw InvalidSpace("prolong_equations expects a connection on E (order 0)");
    JetSpace j2 = space.with_order(2);
    std::vector<ProlongEquation> out;
    for (int a = 0; a < space.m(); ++a) {
        for (int j = 1; j <= space.n(); ++j) {
            ProlongEquation e;
            e.target = j2.coordinate_name(a, MultiIndex({j}));
            e.k = j;
            e.rhs = conn.coefficient(std::size_t(a), j);
            e.residual = simplify(Expr::var(e.target) - e.rhs);
            e.label = e.target;
            out.push_back(std::move(e));
        }
    }
    for (int a = 0; a < space.m(); ++a) {
        for (int j = 1; j <= space.n(); ++j) {
            for (int k = 1; k <= space.n(); ++k) {
                ProlongEquation e;
                e.target = j2.coordinate_name(a, MultiIndex({j, k}));
                e.j = j;
                e.k = k;
                e.rhs = connection_total_derivative(conn, conn.coefficient(std::size_t(a), j), k);
                e.residual = simplify(Expr::var(e.target) - e.rhs);
                e.label = e.target + " via (" + std::to_string(j) + "," + std::to_string(k) + ")";
                out.push_back(std::move(e));
            }
        }
    }
    return out;
}

// One entry of the prolongation search: the value forced on an iterated
// second-layer coordinate by differentiating c along direction r.
struct ProlongCandidate {
    std::string key;  // consistency group
    std::size_t fiber_index;
    int j;
    int r;
    double value;
};

struct ProlongationSearch {
    std::vector<ProlongCandidate> candidates;
    bool preimage_exists = true;
    double worst_gap = 0.0;
};

// Direct search for a point of rho(c(J^k)) above p. Differentiating the
// equations y_{mu,j} = c_{mu,j} along x^r and substituting the connection
// gives candidates for the second-layer jets; a preimage exists iff every
// group of candidates naming the same coordinate agrees within tol. For a
// geometric connection the top-order groups are the canonical order-(k+2)
// indices mu + 1_j + 1_r; otherwise they are the symmetric pairs {j, r}.
// Candidates are built from unsimplified derivative trees and evaluated
// numerically, independent of curvature().
inline ProlongationSearch prolongation_search_at(const Connection& conn, const Binding& p, double tol = 1e-9,
                                                 std::optional<bool> geometric = std::nullopt) {
    const JetSpace& space = conn.space();
    bool geo = geometric.has_value() ? *geometric : is_geometric(conn).geometric;
    const auto& fiber = space.fiber_coordinates();

    auto raw_total = [&](const Expr& e, int r) {
        double v = eval(detail::raw_diff(e, space.base_names()[std::size_t(r - 1)]), p);
        for (std::size_t g = 0; g < fiber.size(); ++g) {
            double dv = eval(detail::raw_diff(e, space.coordinate_name(fiber[g])), p);
            if (dv != 0.0) v += dv * eval(conn.coefficient(g, r), p);
        }
        return v;
    };

    ProlongationSearch out;
    std::map<std::string, double> first;
    for (std::size_t f = 0; f < fiber.size(); ++f) {
        const JetCoordinate& c = fiber[f];
        for (int j = 1; j <= space.n(); ++j) {
            for (int r = 1; r <= space.n(); ++r) {
                std::string key;
                if (geo && int(c.mu.order()) == space.order()) {
                    key = "top:" + space.fiber_names()[std::size_t(c.alpha)] + ":" + c.mu.plus(j).plus(r).digits();
                } else {
                    if (j == r) continue;
                    key = "pair:" + space.coordinate_name(c) + ":" + std::to_string(std::min(j, r)) + std::to_string(std::max(j, r));
                }
                double v = raw_total(conn.coefficient(f, j), r);
                out.candidates.push_back({key, f, j, r, v});
                auto [it, inserted] = first.emplace(key, v);
                if (!inserted) {
                    double gap = std::abs(it->second - v);
                    out.worst_gap = std::max(out.worst_gap, gap);
                    if (!(gap < tol)) out.preimage_exists = false;
                }
            }
        }
    }
    return out;
}

inline bool prolongation_surjective_at(const Connection& conn, const Binding& p, double tol = 1e-9) {
    return prolongation_search_at(conn, p, tol).preimage_exists;
}

// ---------------------------------------------------------------------------
// Reduction of a solved-form PDE to a first-order system

// Fiber coordinates u = (y^a_tau, |tau| <= k-1) over the same base; the
// coefficients are u_{tau+1_j} below the top and f_{tau+1_j} at |tau| = k-1.
inline Connection reduce_to_first_order(const SolvedPde& pde, std::string id = {}) {
    JetSpace lower = pde.lower_space();
    std::vector<std::string> u_names;
    for (const JetCoordinate& c : lower.fiber_coordinates()) u_names.push_back(lower.coordinate_name(c));
    JetLimits limits = lower.limits();
    JetSpace aux(lower.base_names(), u_names, 0, limits);
    std::vector<Expr> coeffs;
    int top = pde.order() - 1;
    for (const JetCoordinate& c : lower.fiber_coordinates()) {
        for (int j = 1; j <= lower.n(); ++j) {
            MultiIndex next = c.mu.plus(j);
            if (int(c.mu.order()) < top) coeffs.push_back(Expr::var(lower.coordinate_name(c.alpha, next)));
            else coeffs.push_back(pde.f(c.alpha, next));
        }
    }
    return Connection(aux, std::move(coeffs), std::move(id));
}

// ---------------------------------------------------------------------------
// Epsilon sections

struct ConnectionDefect {
    int alpha;
    MultiIndex nu;
    int j;
    Expr value;  // D^f_j f_nu - g_{nu+1_j}
};

struct PhgCurvature {
    std::vector<ConnectionDefect> connection_defect;
    Curvature frobenius_defect;
    std::size_t rank = 0;  // number of defect slots
};

inline std::vector<ConnectionDefect> connection_defects(const EpsilonSection& eps) {
    const SolvedPde& pde = eps.base();
    Connection reduced = reduce_to_first_order(pde);
    std::vector<ConnectionDefect> out;
    const JetSpace& s = pde.space();
    for (int a = 0; a < s.m(); ++a) {
        for (const MultiIndex& nu : multi_indices(s.n(), std::size_t(s.order()))) {
            for (int j = 1; j <= s.n(); ++j) {
                Expr d = connection_total_derivative(reduced, pde.f(a, nu), j);
                out.push_back({a, nu, j, simplify(d - eps.g(a, nu.plus(j)))});
            }
        }
    }
    return out;
}

inline PhgCurvature phg_curvature(const EpsilonSection& eps) {
    PhgCurvature pc;
    pc.connection_defect = connection_defects(eps);
    pc.frobenius_defect = curvature(reduce_to_first_order(eps.base()));
    pc.rank = pc.connection_defect.size() + pc.frobenius_defect.stored().size();
    return pc;
}

struct DefectVerdict {
    ConnectionDefect defect;
    ZeroVerdict verdict;
};

struct EpsilonReport {
    bool is_connection = true;
    std::vector<DefectVerdict> defects;
};

// eps is a connection iff g_{nu+1_j} = D^f_j f_nu for every (nu, j), each
// decomposition checked separately.
inline EpsilonReport epsilon_is_connection(const EpsilonSection& eps, const ZeroTestOptions& opt = {}) {
    EpsilonReport rep;
    for (ConnectionDefect& d : connection_defects(eps)) {
        ZeroVerdict v = is_zero(d.value, opt);
        rep.is_connection = rep.is_connection && v.is_zero();
        rep.defects.push_back({std::move(d), std::move(v)});
    }
    return rep;
}

inline bool phg_curvature_vanishes(const PhgCurvature& pc, const ZeroTestOptions& opt = {}) {
    for (const ConnectionDefect& d : pc.connection_defect)
        if (!is_zero(d.value, opt).is_zero()) return false;
    return is_flat(pc.frobenius_defect, opt).flat;
}

// Candidate solutions of eps(H^k) by brute force, reduced to "where does the
// point have a preimage in rho(eps(H^k))".
struct ExactnessResult {
    bool preimage_exists = true;
    std::vector<double> curvature_at_p;  // connection defects, then Frobenius components
    double max_abs_curvature = 0.0;
    double worst_gap = 0.0;              // largest candidate disagreement
};

class ExactnessChecker {
public:
    explicit ExactnessChecker(const EpsilonSection& eps, double tol = 1e-9)
        : eps_(eps), curvature_(phg_curvature(eps)), tol_(tol) {
        const SolvedPde& pde = eps.base();
        const JetSpace& s = pde.space();
        lower_ = pde.lower_space();
        upper_ = s.with_order(s.order() + 1);
        // order k+1: D_j f_nu must equal g_{nu+1_j}
        for (int a = 0; a < s.m(); ++a)
            for (const MultiIndex& nu : multi_indices(s.n(), std::size_t(s.order())))
                for (int j = 1; j <= s.n(); ++j)
                    first_.push_back({a, nu.plus(j), total_derivative(lower_, pde.f(a, nu), j)});
        // order k+2: every decomposition sigma + 1_j of the same index must agree
        for (int a = 0; a < s.m(); ++a)
            for (const MultiIndex& sigma : multi_indices(s.n(), std::size_t(s.order() + 1)))
                for (int j = 1; j <= s.n(); ++j)
                    second_.push_back({a, sigma.plus(j), total_derivative(lower_, eps.g(a, sigma), j)});
    }

    const PhgCurvature& curvature() const { return curvature_; }

    // p assigns every J^{k-1} coordinate.
    ExactnessResult at(const Binding& p) const {
        const SolvedPde& pde = eps_.base();
        const JetSpace& s = pde.space();
        ExactnessResult out;

        // Lift p to the point of eps(H^k) in J^{k+1}.
        Binding q;
        for (const std::string& name : lower_.coordinates()) q[name] = p.at(name);
        for (int a = 0; a < s.m(); ++a) {
            for (const MultiIndex& nu : multi_indices(s.n(), std::size_t(s.order())))
                q[s.coordinate_name(a, nu)] = eval(pde.f(a, nu), p);
            for (const MultiIndex& sg : multi_indices(s.n(), std::size_t(s.order() + 1)))
                q[upper_.coordinate_name(a, sg)] = eval(eps_.g(a, sg), p);
        }

        for (const Candidate& c : first_) {
            double gap = std::abs(eval(c.expr, q) - q.at(upper_.coordinate_name(c.alpha, c.index)));
            note(out, gap);
        }
        std::map<std::pair<int, MultiIndex>, double> seen;
        for (const Candidate& c : second_) {
            double v = eval(c.expr, q);
            auto [it, inserted] = seen.emplace(std::make_pair(c.alpha, c.index), v);
            if (!inserted) note(out, std::abs(it->second - v));
        }

        for (const ConnectionDefect& d : curvature_.connection_defect) out.curvature_at_p.push_back(eval(d.value, p));
        for (const Expr& r : curvature_.frobenius_defect.stored()) out.curvature_at_p.push_back(eval(r, p));
        for (double v : out.curvature_at_p) out.max_abs_curvature = std::max(out.max_abs_curvature, std::abs(v));
        return out;
    }

private:
    struct Candidate {
        int alpha;
        MultiIndex index;
        Expr expr;
    };

    void note(ExactnessResult& out, double gap) const {
        out.worst_gap = std::max(out.worst_gap, gap);
        if (!(gap < tol_)) out.preimage_exists = false;
    }

    EpsilonSection eps_;
    PhgCurvature curvature_;
    double tol_;
    JetSpace lower_;
    JetSpace upper_;
    std::vector<Candidate> first_;
    std::vector<Candidate> second_;
};

inline ExactnessResult exactness_check_at(const EpsilonSection& eps, const Binding& p, double tol = 1e-9) {
    return ExactnessChecker(eps, tol).at(p);
}

}  // namespace jetc
