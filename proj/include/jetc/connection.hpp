#pragma once

// Connections on J^k(E): crossections of J^1(J^k(E)) -> J^k(E) written as a
// coefficient table c[alpha][mu][j], one Expr per fiber coordinate y^alpha_mu
// (|mu| <= k) and base direction j. They encode the first-order system
//
//     d y^alpha_mu / d x^j = c^alpha_{mu,j}(x, y_k).
//
// k = 0 is an ordinary connection on the fibered manifold E -> M.

#include <jetc/error.hpp>
#include <jetc/expr.hpp>
#include <jetc/jet_space.hpp>

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace jetc {

class Connection {
public:
    Connection() = default;

    // `coefficients` is indexed by fiber_index * n + (j - 1).
    Connection(JetSpace space, std::vector<Expr> coefficients, std::string id = {})
        : space_(std::move(space)), coefficients_(std::move(coefficients)), id_(std::move(id)) {
        std::size_t expected = space_.fiber_coordinates().size() * std::size_t(space_.n());
        if (coefficients_.size() != expected)
            throw InvalidSpace("connection needs " + std::to_string(expected) + " coefficients, got " +
                               std::to_string(coefficients_.size()));
        for (const Expr& c : coefficients_) detail::require_vars_in(c, space_);
    }

    // Coefficients keyed by (alpha, mu, j); every slot must be present.
    static Connection from_slots(const JetSpace& space, const std::map<std::tuple<int, MultiIndex, int>, Expr>& slots,
                                 std::string id = {}) {
        std::vector<Expr> coeffs;
        for (const JetCoordinate& c : space.fiber_coordinates()) {
            for (int j = 1; j <= space.n(); ++j) {
                auto it = slots.find({c.alpha, c.mu, j});
                if (it == slots.end())
                    throw InvalidSpace("missing coefficient c[" + space.fiber_names()[std::size_t(c.alpha)] + ";" +
                                       c.mu.digits() + ";" + std::to_string(j) + "]");
                coeffs.push_back(it->second);
            }
        }
        return Connection(space, std::move(coeffs), std::move(id));
    }

    const JetSpace& space() const { return space_; }
    const std::string& id() const { return id_; }

    const Expr& coefficient(std::size_t fiber_index, int j) const {
        return coefficients_[fiber_index * std::size_t(space_.n()) + std::size_t(j - 1)];
    }

    const Expr& coefficient(int alpha, const MultiIndex& mu, int j) const {
        return coefficient(space_.fiber_index(alpha, mu), j);
    }

    const std::vector<Expr>& coefficients() const { return coefficients_; }

    std::string slot_name(std::size_t fiber_index, int j) const {
        const JetCoordinate& c = space_.fiber_coordinates()[fiber_index];
        return "c[" + space_.fiber_names()[std::size_t(c.alpha)] + ";" + c.mu.digits() + ";" + std::to_string(j) + "]";
    }

private:
    JetSpace space_;
    std::vector<Expr> coefficients_;
    std::string id_;
};

// D^c_r e = de/dx^r + sum over fiber coordinates u of de/du * c_{u,r}.
// No jet order is raised: jets are replaced by the connection's values.
inline Expr connection_total_derivative(const Connection& conn, const Expr& e, int r) {
    const JetSpace& space = conn.space();
    detail::require_vars_in(e, space);
    std::set<std::string> vars = free_variables(e);
    std::vector<Expr> parts;
    const std::string& xr = space.base_names()[std::size_t(r - 1)];
    if (vars.contains(xr)) parts.push_back(diff(e, xr));
    const auto& fiber = space.fiber_coordinates();
    for (std::size_t f = 0; f < fiber.size(); ++f) {
        std::string name = space.coordinate_name(fiber[f]);
        if (!vars.contains(name)) continue;
        parts.push_back(diff(e, name) * conn.coefficient(f, r));
    }
    if (parts.empty()) return Expr::integer(0);
    return simplify(Expr::make(Op::Add, std::move(parts)));
}

// Curvature components R^alpha_{mu,(r,j)}, stored for r < j only.
//
// Alternation convention (no 1/2 factor):
//     R_{(r,j)} = D^c_j c_{mu,r} - D^c_r c_{mu,j},
// i.e. [d c_r/d x^j + d c_r/d y c_j]_{[rj]}. For k = 0, n = 2, c = (y, x1*y)
// this gives R_{(1,2)} = -y.
class Curvature {
public:
    struct Component {
        int alpha;
        MultiIndex mu;
        int r;
        int j;
        Expr value;
    };

    Curvature() = default;
    Curvature(JetSpace space, std::vector<Expr> stored) : space_(std::move(space)), stored_(std::move(stored)) {}

    const JetSpace& space() const { return space_; }

    static std::vector<std::pair<int, int>> pairs(int n) {
        std::vector<std::pair<int, int>> p;
        for (int r = 1; r <= n; ++r)
            for (int j = r + 1; j <= n; ++j) p.emplace_back(r, j);
        return p;
    }

    // Any (r, j); swapped indices negate, r == j is zero.
    Expr component(int alpha, const MultiIndex& mu, int r, int j) const {
        if (r == j) return Expr::integer(0);
        bool swapped = r > j;
        if (swapped) std::swap(r, j);
        const Expr& v = stored_[index(space_.fiber_index(alpha, mu), r, j)];
        return swapped ? simplify(-v) : v;
    }

    std::vector<Component> components() const {
        std::vector<Component> out;
        auto pr = pairs(space_.n());
        const auto& fiber = space_.fiber_coordinates();
        for (std::size_t f = 0; f < fiber.size(); ++f)
            for (std::size_t p = 0; p < pr.size(); ++p)
                out.push_back({fiber[f].alpha, fiber[f].mu, pr[p].first, pr[p].second, stored_[f * pr.size() + p]});
        return out;
    }

    const std::vector<Expr>& stored() const { return stored_; }

    std::string label(const Component& c) const {
        return "R[" + space_.fiber_names()[std::size_t(c.alpha)] + ";" + c.mu.digits() + ";(" + std::to_string(c.r) +
               "," + std::to_string(c.j) + ")]";
    }

private:
    std::size_t index(std::size_t fiber_index, int r, int j) const {
        int n = space_.n();
        // position of (r, j) in pairs(n)
        std::size_t p = 0;
        for (int a = 1; a < r; ++a) p += std::size_t(n - a);
        p += std::size_t(j - r - 1);
        return fiber_index * std::size_t(n * (n - 1) / 2) + p;
    }

    JetSpace space_;
    std::vector<Expr> stored_;
};

inline Curvature curvature(const Connection& conn) {
    const JetSpace& space = conn.space();
    const auto& fiber = space.fiber_coordinates();
    std::vector<Expr> stored;
    auto pr = Curvature::pairs(space.n());
    stored.reserve(fiber.size() * pr.size());
    for (std::size_t f = 0; f < fiber.size(); ++f) {
        for (auto [r, j] : pr) {
            Expr a = connection_total_derivative(conn, conn.coefficient(f, r), j);
            Expr b = connection_total_derivative(conn, conn.coefficient(f, j), r);
            stored.push_back(simplify(a - b));
        }
    }
    return Curvature(space, std::move(stored));
}

struct ComponentVerdict {
    Curvature::Component component;
    ZeroVerdict verdict;
};

struct FlatnessReport {
    std::vector<ComponentVerdict> components;
    bool flat = true;
    bool symbolic = true;  // every component is SymbolicZero
};

inline FlatnessReport is_flat(const Curvature& R, const ZeroTestOptions& opt = {}) {
    FlatnessReport rep;
    for (const auto& c : R.components()) {
        ZeroVerdict v = is_zero(c.value, opt);
        rep.flat = rep.flat && v.is_zero();
        rep.symbolic = rep.symbolic && v.kind == ZeroKind::Symbolic;
        rep.components.push_back({c, std::move(v)});
    }
    if (!rep.flat) rep.symbolic = false;
    return rep;
}

inline FlatnessReport is_flat(const Connection& conn, const ZeroTestOptions& opt = {}) {
    return is_flat(curvature(conn), opt);
}

// Tangent vector at q split per (v^i, v^a) = (v^i, v^a - v^s c_s^a) + (0, v^s c_s^a).
struct SplitResult {
    std::vector<double> horizontal;
    std::vector<double> vertical;
};

inline SplitResult split(const Connection& conn, const Binding& q, const std::vector<double>& v) {
    const JetSpace& space = conn.space();
    if (space.order() != 0) throw InvalidSpace("split is defined for connections on E (order 0)");
    std::size_t n = std::size_t(space.n()), m = std::size_t(space.m());
    if (v.size() != n + m) throw InvalidSpace("tangent vector needs n + m components");
    SplitResult out{v, std::vector<double>(n + m, 0.0)};
    for (std::size_t a = 0; a < m; ++a) {
        double contracted = 0.0;
        for (std::size_t s = 0; s < n; ++s) contracted += v[s] * eval(conn.coefficient(a, int(s + 1)), q);
        out.horizontal[n + a] = v[n + a] - contracted;
        out.vertical[n + a] = contracted;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Geometric connections

struct GeometricViolation {
    enum class Kind { Lower, Symmetry } kind;
    int alpha;
    MultiIndex mu;
    int j;
    MultiIndex other_mu;  // Symmetry only
    int other_j = 0;
    std::string describe(const JetSpace& space) const {
        std::string f = space.fiber_names()[std::size_t(alpha)];
        if (kind == Kind::Lower)
            return "c[" + f + ";" + mu.digits() + ";" + std::to_string(j) + "] is not " +
                   space.coordinate_name(alpha, mu.plus(j));
        return "c[" + f + ";" + mu.digits() + ";" + std::to_string(j) + "] != c[" + f + ";" + other_mu.digits() + ";" +
               std::to_string(other_j) + "]";
    }
};

struct GeometricReport {
    bool geometric = true;
    std::vector<GeometricViolation> violations;
};

// Lower coefficients must be the next jet coordinate; top coefficients must
// agree whenever mu + 1_j names the same order-(k+1) index.
inline GeometricReport is_geometric(const Connection& conn, const ZeroTestOptions& opt = {}) {
    GeometricReport rep;
    const JetSpace& space = conn.space();
    int k = space.order();
    if (k == 0) return rep;
    std::map<std::pair<int, MultiIndex>, std::pair<MultiIndex, int>> first_seen;
    for (const JetCoordinate& c : space.fiber_coordinates()) {
        for (int j = 1; j <= space.n(); ++j) {
            const Expr& coef = conn.coefficient(c.alpha, c.mu, j);
            if (int(c.mu.order()) < k) {
                Expr expected = Expr::var(space.coordinate_name(c.alpha, c.mu.plus(j)));
                if (!equivalent(coef, expected, opt).is_zero())
                    rep.violations.push_back({GeometricViolation::Kind::Lower, c.alpha, c.mu, j, {}, 0});
                continue;
            }
            auto key = std::make_pair(c.alpha, c.mu.plus(j));
            auto [it, inserted] = first_seen.emplace(key, std::make_pair(c.mu, j));
            if (inserted) continue;
            const Expr& other = conn.coefficient(c.alpha, it->second.first, it->second.second);
            if (!equivalent(coef, other, opt).is_zero())
                rep.violations.push_back(
                    {GeometricViolation::Kind::Symmetry, c.alpha, it->second.first, it->second.second, c.mu, j});
        }
    }
    rep.geometric = rep.violations.empty();
    return rep;
}

// Top-order values c_top[alpha][sigma], |sigma| = k + 1, over J^k.
class GeometricSpec {
public:
    GeometricSpec(JetSpace space, std::map<std::pair<int, MultiIndex>, Expr> top)
        : space_(std::move(space)), top_(std::move(top)) {
        for (int a = 0; a < space_.m(); ++a) {
            for (const MultiIndex& s : multi_indices(space_.n(), std::size_t(space_.order() + 1))) {
                auto it = top_.find({a, s});
                if (it == top_.end())
                    throw InvalidSpace("missing ctop[" + space_.fiber_names()[std::size_t(a)] + ";" + s.digits() + "]");
                detail::require_vars_in(it->second, space_);
            }
        }
    }

    const JetSpace& space() const { return space_; }
    const Expr& top(int alpha, const MultiIndex& sigma) const { return top_.at({alpha, sigma}); }
    const std::map<std::pair<int, MultiIndex>, Expr>& tops() const { return top_; }

private:
    JetSpace space_;
    std::map<std::pair<int, MultiIndex>, Expr> top_;
};

inline Connection make_geometric(const GeometricSpec& spec, std::string id = {}) {
    const JetSpace& space = spec.space();
    std::vector<Expr> coeffs;
    for (const JetCoordinate& c : space.fiber_coordinates()) {
        for (int j = 1; j <= space.n(); ++j) {
            MultiIndex next = c.mu.plus(j);
            if (int(c.mu.order()) < space.order()) coeffs.push_back(Expr::var(space.coordinate_name(c.alpha, next)));
            else coeffs.push_back(spec.top(c.alpha, next));
        }
    }
    return Connection(space, std::move(coeffs), std::move(id));
}

}  // namespace jetc
