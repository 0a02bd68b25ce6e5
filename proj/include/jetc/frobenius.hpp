#pragma once

// Numerical integration of connections by axis-ordered RK4 sweeps.
//
// A connection on J^k is treated as the first-order system
// dY/dx^j = c_{.,j}(x, Y) on its fiber coordinates Y. integrate() fills a
// grid box by sweeping axis 1 through the initial node, then axis 2 from
// every node of that line, and so on. For a flat connection the result
// approximates the unique local solution; for a non-flat one the sweep
// order matters, and path_dependence() measures by how much.

#include <jetc/connection.hpp>
#include <jetc/error.hpp>
#include <jetc/expr.hpp>
#include <jetc/jet_space.hpp>
#include <jetc/phg.hpp>
#include <jetc/trace.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace jetc {

namespace detail {

class FirstOrderSystem {
public:
    explicit FirstOrderSystem(const Connection& conn) : space_(conn.space()) {
        const auto& names = space_.coordinates();
        std::size_t fibers = space_.fiber_coordinates().size();
        rhs_.resize(std::size_t(space_.n()));
        for (int j = 1; j <= space_.n(); ++j)
            for (std::size_t f = 0; f < fibers; ++f) rhs_[std::size_t(j - 1)].emplace_back(conn.coefficient(f, j), names);
    }

    std::size_t n() const { return std::size_t(space_.n()); }
    std::size_t width() const { return rhs_.front().size(); }

    // One classical RK4 step of size s along axis (0-based). `x` is the base
    // point, updated to x + s e_axis; `y` is updated in place.
    void step(std::size_t axis, std::vector<double>& x, std::vector<double>& y, double s, double x_end) const {
        std::size_t w = width();
        std::vector<double> k1(w), k2(w), k3(w), k4(w), tmp(w);
        std::vector<double> point(n() + w);
        auto eval_rhs = [&](double xa, const std::vector<double>& state, std::vector<double>& out) {
            std::copy(x.begin(), x.end(), point.begin());
            point[axis] = xa;
            std::copy(state.begin(), state.end(), point.begin() + std::ptrdiff_t(n()));
            for (std::size_t f = 0; f < w; ++f) out[f] = rhs_[axis][f](point);
        };
        double x0 = x[axis];
        eval_rhs(x0, y, k1);
        for (std::size_t f = 0; f < w; ++f) tmp[f] = y[f] + 0.5 * s * k1[f];
        eval_rhs(x0 + 0.5 * s, tmp, k2);
        for (std::size_t f = 0; f < w; ++f) tmp[f] = y[f] + 0.5 * s * k2[f];
        eval_rhs(x0 + 0.5 * s, tmp, k3);
        for (std::size_t f = 0; f < w; ++f) tmp[f] = y[f] + s * k3[f];
        eval_rhs(x0 + s, tmp, k4);
        for (std::size_t f = 0; f < w; ++f) y[f] += s / 6.0 * (k1[f] + 2.0 * k2[f] + 2.0 * k3[f] + k4[f]);
        x[axis] = x_end;
    }

private:
    JetSpace space_;
    std::vector<std::vector<CompiledExpr>> rhs_;
};

inline void require_finite(const std::vector<double>& y, const std::string& where) {
    for (double v : y)
        if (!std::isfinite(v)) throw NonFiniteEncountered("non-finite value at " + where);
}

inline std::string describe_node(const GridBox& box, const std::vector<std::size_t>& idx) {
    std::string s = "node (";
    for (std::size_t j = 0; j < idx.size(); ++j) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", box.coordinate(j, idx[j]));
        s += (j ? "," : "") + std::string(buf);
    }
    return s + ")";
}

}  // namespace detail

// Sweeps in the given axis order (0-based; default 0..n-1). `init` holds all
// coordinates of the connection's space in coordinate order; its base part
// must be a grid node.
inline SolutionTrace integrate(const Connection& conn, const std::vector<double>& init, const GridBox& box,
                               std::vector<std::size_t> axis_order = {}) {
    const JetSpace& space = conn.space();
    std::size_t n = std::size_t(space.n());
    if (box.dims() != n) throw InvalidGrid("box dimension does not match base dimension");
    if (init.size() != space.dimension()) throw InvalidSpace("initial point needs all coordinates");
    if (axis_order.empty()) {
        axis_order.resize(n);
        std::iota(axis_order.begin(), axis_order.end(), 0);
    }
    {
        std::vector<std::size_t> sorted = axis_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t j = 0; j < n; ++j)
            if (sorted.size() != n || sorted[j] != j) throw InvalidGrid("axis order must be a permutation");
    }

    std::vector<std::size_t> start(n);
    for (std::size_t j = 0; j < n; ++j) {
        double rel = (init[j] - box.lo()[j]) / box.step();
        double r = std::round(rel);
        if (r < 0 || r > double(box.counts()[j] - 1) || std::abs(rel - r) > 1e-6)
            throw InvalidGrid("initial base point is not a node of the box");
        start[j] = std::size_t(r);
    }

    detail::FirstOrderSystem sys(conn);
    std::size_t w = sys.width();
    SolutionTrace trace;
    trace.box = box;
    trace.space = space;
    for (const JetCoordinate& c : space.fiber_coordinates()) trace.columns.push_back(space.coordinate_name(c));
    trace.values.assign(box.node_count() * w, 0.0);
    trace.metadata.connection_id = conn.id();
    trace.metadata.init = init;
    trace.metadata.step = box.step();

    auto store = [&](const std::vector<std::size_t>& idx, const std::vector<double>& y) {
        std::copy(y.begin(), y.end(), trace.values.begin() + std::ptrdiff_t(box.linear(idx) * w));
    };
    auto load = [&](const std::vector<std::size_t>& idx) {
        auto b = trace.values.begin() + std::ptrdiff_t(box.linear(idx) * w);
        return std::vector<double>(b, b + std::ptrdiff_t(w));
    };

    // Sweep one axis in both directions from the node idx.
    auto sweep = [&](std::size_t axis, const std::vector<std::size_t>& idx) {
        for (int dir : {+1, -1}) {
            std::vector<std::size_t> cur = idx;
            std::vector<double> x = box.point(cur);
            std::vector<double> y = load(cur);
            for (;;) {
                if (dir > 0 && cur[axis] + 1 >= box.counts()[axis]) break;
                if (dir < 0 && cur[axis] == 0) break;
                std::size_t next = dir > 0 ? cur[axis] + 1 : cur[axis] - 1;
                double x_end = box.coordinate(axis, next);
                sys.step(axis, x, y, x_end - x[axis], x_end);
                cur[axis] = next;
                detail::require_finite(y, detail::describe_node(box, cur));
                store(cur, y);
            }
        }
    };

    std::vector<double> y0(init.begin() + std::ptrdiff_t(n), init.end());
    detail::require_finite(y0, "initial point");
    store(start, y0);

    // After sweeping axes axis_order[0..s), the filled set is every node whose
    // remaining coordinates match the start node.
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t axis = axis_order[s];
        for (std::size_t node = 0; node < box.node_count(); ++node) {
            std::vector<std::size_t> idx = box.multi(node);
            bool on_slice = true;
            for (std::size_t t = s; t < n; ++t) on_slice = on_slice && idx[axis_order[t]] == start[axis_order[t]];
            if (on_slice) sweep(axis, idx);
        }
    }
    return trace;
}

// Terminal values of integrating from the base point of init to `corner`
// along one axis at a time, in the given order.
inline std::vector<double> integrate_path(const Connection& conn, const std::vector<double>& init,
                                          const std::vector<double>& corner, double h,
                                          const std::vector<std::size_t>& axis_order) {
    const JetSpace& space = conn.space();
    std::size_t n = std::size_t(space.n());
    if (corner.size() != n) throw InvalidGrid("corner needs one value per base axis");
    if (!(h > 0.0)) throw InvalidGrid("step must be positive");
    detail::FirstOrderSystem sys(conn);
    std::vector<double> x(init.begin(), init.begin() + std::ptrdiff_t(n));
    std::vector<double> y(init.begin() + std::ptrdiff_t(n), init.end());
    for (std::size_t axis : axis_order) {
        double delta = corner[axis] - x[axis];
        if (delta == 0.0) continue;
        auto steps = std::max<long long>(1, std::llround(std::abs(delta) / h));
        double start = x[axis];
        for (long long i = 1; i <= steps; ++i) {
            double x_end = i == steps ? corner[axis] : start + delta * double(i) / double(steps);
            sys.step(axis, x, y, x_end - x[axis], x_end);
            detail::require_finite(y, "path integration");
        }
    }
    return y;
}

struct PathReport {
    std::vector<std::vector<std::size_t>> orders;  // 0-based axis permutations
    std::vector<std::vector<double>> terminal;
    double discrepancy = 0.0;                      // max over pairs, max norm
};

inline PathReport path_dependence(const Connection& conn, const std::vector<double>& init,
                                  const std::vector<double>& corner, double h) {
    std::size_t n = std::size_t(conn.space().n());
    if (init.size() != conn.space().dimension()) throw InvalidSpace("initial point needs all coordinates");
    PathReport rep;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    do {
        rep.orders.push_back(order);
        rep.terminal.push_back(integrate_path(conn, init, corner, h, order));
    } while (std::next_permutation(order.begin(), order.end()));
    for (std::size_t a = 0; a < rep.terminal.size(); ++a)
        for (std::size_t b = a + 1; b < rep.terminal.size(); ++b)
            for (std::size_t f = 0; f < rep.terminal[a].size(); ++f)
                rep.discrepancy = std::max(rep.discrepancy, std::abs(rep.terminal[a][f] - rep.terminal[b][f]));
    return rep;
}

struct GeometricSolution {
    SolutionTrace trace;
    bool geometric = true;
    bool flat = true;
    double holonomy_defect = 0.0;
    // k = 1 only: max |second difference of y^a along (j, k) - c_top[a][jk]|.
    std::optional<double> second_derivative_residual;
};

// Integrates a geometric connection and checks that its solution is
// holonomic. With strict set, a non-geometric connection is rejected.
inline GeometricSolution solve_geometric(const Connection& conn, const std::vector<double>& init, const GridBox& box,
                                         bool strict = true, const ZeroTestOptions& opt = {}) {
    GeometricSolution out;
    out.geometric = is_geometric(conn, opt).geometric;
    if (!out.geometric && strict) throw NotGeometric("connection is not geometric");
    out.flat = is_flat(conn, opt).flat;
    out.trace = integrate(conn, init, box);
    const JetSpace& space = conn.space();
    if (space.order() >= 1) out.holonomy_defect = holonomy_defect(out.trace);
    if (space.order() == 1) {
        const GridBox& g = out.trace.box;
        const SolutionTrace& t = out.trace;
        std::vector<std::string> names = space.coordinates();
        std::map<std::tuple<int, int, int>, CompiledExpr> tops;
        for (int a = 0; a < space.m(); ++a)
            for (int j = 1; j <= space.n(); ++j)
                for (int k = j; k <= space.n(); ++k)
                    tops.emplace(std::make_tuple(a, j, k), CompiledExpr(conn.coefficient(a, MultiIndex({j}), k), names));
        double worst = 0.0;
        std::size_t nb = std::size_t(space.n());
        std::vector<double> point(space.dimension());
        for (std::size_t node = 0; node < g.node_count(); ++node) {
            std::vector<std::size_t> idx = g.multi(node);
            bool interior = true;
            for (std::size_t j = 0; j < idx.size(); ++j) interior = interior && idx[j] > 0 && idx[j] + 1 < g.counts()[j];
            if (!interior) continue;
            std::vector<double> x = g.point(idx);
            std::copy(x.begin(), x.end(), point.begin());
            for (std::size_t f = 0; f < t.width(); ++f) point[nb + f] = t.at(node, f);
            for (int a = 0; a < space.m(); ++a) {
                std::size_t col = space.fiber_index(a, MultiIndex{});
                auto val = [&](std::vector<std::size_t> i) { return t.at(g.linear(i), col); };
                for (int j = 1; j <= space.n(); ++j) {
                    for (int k = j; k <= space.n(); ++k) {
                        std::size_t aj = std::size_t(j - 1), ak = std::size_t(k - 1);
                        double h = g.step();
                        double d2;
                        if (j == k) {
                            auto p = idx, m = idx;
                            ++p[aj];
                            --m[aj];
                            d2 = (val(p) - 2.0 * t.at(node, col) + val(m)) / (h * h);
                        } else {
                            auto pp = idx, pm = idx, mp = idx, mm = idx;
                            ++pp[aj], ++pp[ak];
                            ++pm[aj], --pm[ak];
                            --mp[aj], ++mp[ak];
                            --mm[aj], --mm[ak];
                            d2 = (val(pp) - val(pm) - val(mp) + val(mm)) / (4.0 * h * h);
                        }
                        worst = std::max(worst, std::abs(d2 - tops.at({a, j, k})(point)));
                    }
                }
            }
        }
        out.second_derivative_residual = worst;
    }
    return out;
}

// Holonomic solutions of a solved-form PDE through its reduced first-order
// system. `init` assigns (x, y_{k-1}) in J^{k-1} coordinate order; the trace
// is labelled with J^{k-1}.
inline SolutionTrace solve_pde(const SolvedPde& pde, const std::vector<double>& init, const GridBox& box,
                               std::string id = {}) {
    SolutionTrace t = integrate(reduce_to_first_order(pde, std::move(id)), init, box);
    t.space = pde.lower_space();
    return t;
}

}  // namespace jetc
