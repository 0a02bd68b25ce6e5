#pragma once

// Batch commands over a loaded problem file. Each command calls one library
// operation and renders the result as text and as a JSON report.

#include <jetc/connection.hpp>
#include <jetc/frobenius.hpp>
#include <jetc/phg.hpp>
#include <jetc/problem_file.hpp>

#include <json.hpp>

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace jetc {

struct CommandOptions {
    double tol = 1e-9;
    std::size_t samples = 200;
    bool symbolic = false;
    bool strict = false;
    std::optional<std::string> box;     // NAME or a:b,c:d,...
    std::optional<double> step;
    std::optional<std::string> init;    // NAME or v,v,... in coordinate order
    std::optional<std::string> at;      // evaluation point, same syntax as init
    std::optional<std::string> corner;  // v,v,... over the base
    std::optional<std::string> exact;   // closed form for the first fiber coordinate
};

struct CommandResult {
    int exit_code = 0;
    std::string text;
    nlohmann::json report;
    std::optional<SolutionTrace> trace;
};

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"curvature", "flat",     "geometric",     "prolong",
                                                   "surjective-at", "solve", "paths",        "eps-check",
                                                   "phg-curvature", "exactness-at"};
    return names;
}

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(eval(parse(item, {}), {}));
        } catch (const Error&) {
            throw Error("bad " + what + " value '" + item + "'");
        }
    }
    return out;
}

inline std::vector<double> resolve_point(const ProblemFile& pf, const std::optional<std::string>& spec,
                                         const std::string& flag) {
    if (!spec) throw Error("missing --" + flag);
    JetSpace ps = pf.point_space();
    auto named = pf.points.find(*spec);
    if (named != pf.points.end()) {
        for (const std::string& c : ps.coordinates())
            if (!named->second.contains(c)) throw Error("point " + *spec + " does not assign " + c);
        return ps.values(named->second);
    }
    std::vector<double> v = parse_list(*spec, "--" + flag);
    if (v.size() != ps.dimension())
        throw Error("--" + flag + " needs " + std::to_string(ps.dimension()) + " values, got " + std::to_string(v.size()));
    return v;
}

inline GridBox resolve_box(const ProblemFile& pf, const CommandOptions& o) {
    if (!o.box) throw Error("missing --box");
    std::vector<double> lo, hi;
    std::optional<double> step = o.step;
    auto named = pf.boxes.find(*o.box);
    if (named != pf.boxes.end()) {
        lo = named->second.lo;
        hi = named->second.hi;
        if (!step) step = named->second.step;
    } else {
        std::stringstream ss(*o.box);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto colon = item.find(':');
            if (colon == std::string::npos) throw Error("bad --box range '" + item + "'");
            lo.push_back(parse_list(item.substr(0, colon), "--box").at(0));
            hi.push_back(parse_list(item.substr(colon + 1), "--box").at(0));
        }
    }
    if (!step) throw Error("missing --step");
    if (lo.size() != std::size_t(pf.space.n()))
        throw Error("--box needs " + std::to_string(pf.space.n()) + " ranges");
    return GridBox(lo, hi, *step);
}

inline nlohmann::json verdict_json(const ZeroVerdict& v) {
    nlohmann::json j = {{"kind", to_string(v.kind)}};
    if (v.kind == ZeroKind::NonZero) {
        j["witness"] = v.witness;
        j["witness_value"] = v.witness_value;
    }
    return j;
}

inline std::string witness_text(const ZeroVerdict& v) {
    std::string s = "at";
    for (const auto& [name, value] : v.witness) s += " " + name + "=" + num(value);
    return s + " value " + num(v.witness_value);
}

inline std::string defect_label(const JetSpace& s, const ConnectionDefect& d) {
    return "D[" + s.fiber_names()[std::size_t(d.alpha)] + ";" + d.nu.digits() + ";" + std::to_string(d.j) + "]";
}

inline const EpsilonSection& require_eps(const ProblemFile& pf) {
    if (!pf.epsilon) throw Error("command needs a solved PDE with an epsilon block (g[...] lines)");
    return *pf.epsilon;
}

inline Curvature problem_curvature(const ProblemFile& pf) { return curvature(pf.working_connection()); }

}  // namespace detail

inline CommandResult run_command(const std::string& command, const ProblemFile& pf, const CommandOptions& o) {
    using nlohmann::json;
    using detail::num;
    ZeroTestOptions zopt;
    zopt.samples = o.samples;
    zopt.tol = o.tol;
    zopt.symbolic_only = o.symbolic;

    CommandResult res;
    std::ostringstream text;
    json& rep = res.report;
    rep["schema"] = 1;
    rep["command"] = command;
    rep["problem"] = to_string(pf.kind);

    if (command == "curvature") {
        Curvature R = detail::problem_curvature(pf);
        json comps = json::array();
        for (const auto& c : R.components()) {
            text << R.label(c) << " = " << c.value.str() << '\n';
            comps.push_back({{"label", R.label(c)}, {"expr", c.value.str()}});
        }
        if (comps.empty()) text << "no curvature components (one base dimension)\n";
        rep["components"] = comps;
        rep["convention"] = "R(r,j) = D_j c_r - D_r c_j, stored for r < j";
        rep["chart_transformation_checked"] = false;
    } else if (command == "flat") {
        FlatnessReport fr = is_flat(detail::problem_curvature(pf), zopt);
        Curvature R = detail::problem_curvature(pf);
        json comps = json::array();
        for (const auto& cv : fr.components) {
            comps.push_back({{"label", R.label(cv.component)}, {"verdict", detail::verdict_json(cv.verdict)}});
            if (!cv.verdict.is_zero())
                text << R.label(cv.component) << " != 0 " << detail::witness_text(cv.verdict) << '\n';
        }
        std::string verdict = fr.flat ? (fr.symbolic ? "FLAT (symbolic)" : "FLAT (numeric)") : "NOT FLAT";
        text << verdict << '\n';
        rep["flat"] = fr.flat;
        rep["symbolic"] = fr.symbolic;
        rep["components"] = comps;
        res.exit_code = fr.flat ? 0 : 1;
    } else if (command == "geometric") {
        if (pf.kind == ProblemKind::SolvedPde) throw Error("geometric applies to connection and geometric problems");
        Connection conn = pf.working_connection();
        GeometricReport gr = is_geometric(conn, zopt);
        json viol = json::array();
        for (const auto& v : gr.violations) {
            text << v.describe(conn.space()) << '\n';
            viol.push_back(v.describe(conn.space()));
        }
        text << (gr.geometric ? "GEOMETRIC" : "NOT GEOMETRIC") << '\n';
        rep["geometric"] = gr.geometric;
        rep["violations"] = viol;
        res.exit_code = gr.geometric ? 0 : 1;
    } else if (command == "prolong") {
        Connection conn = pf.working_connection();
        if (conn.space().order() != 0) throw Error("prolong applies to connections on E (order 0)");
        json eqs = json::array();
        for (const ProlongEquation& e : prolong_equations(conn)) {
            text << e.target << " = " << e.rhs.str();
            if (e.j > 0) text << "  [D_" << e.k << " c_" << e.j << "]";
            text << '\n';
            eqs.push_back({{"label", e.label}, {"target", e.target}, {"rhs", e.rhs.str()}});
        }
        rep["equations"] = eqs;
    } else if (command == "surjective-at") {
        Connection conn = pf.working_connection();
        Binding p = conn.space().bind(detail::resolve_point(pf, o.at, "at"));
        ProlongationSearch ps = prolongation_search_at(conn, p, o.tol);
        double max_r = 0.0;
        Curvature R = curvature(conn);
        for (const Expr& r : R.stored()) max_r = std::max(max_r, std::abs(eval(r, p)));
        text << (ps.preimage_exists ? "SURJECTIVE" : "NOT SURJECTIVE") << '\n'
             << "worst candidate gap = " << num(ps.worst_gap) << '\n'
             << "max |R| at point = " << num(max_r) << '\n';
        rep["surjective"] = ps.preimage_exists;
        rep["worst_gap"] = ps.worst_gap;
        rep["max_abs_curvature"] = max_r;
        res.exit_code = ps.preimage_exists ? 0 : 1;
    } else if (command == "solve") {
        std::vector<double> init = detail::resolve_point(pf, o.init, "init");
        GridBox box = detail::resolve_box(pf, o);
        SolutionTrace trace;
        if (pf.kind == ProblemKind::SolvedPde) {
            trace = solve_pde(*pf.pde, init, box, pf.source);
        } else {
            Connection conn = pf.working_connection();
            if (o.strict || pf.kind == ProblemKind::Geometric) {
                GeometricSolution gs = solve_geometric(conn, init, box, o.strict, zopt);
                trace = std::move(gs.trace);
                rep["geometric"] = gs.geometric;
                rep["flat"] = gs.flat;
                if (gs.second_derivative_residual) rep["second_derivative_residual"] = *gs.second_derivative_residual;
            } else {
                trace = integrate(conn, init, box);
            }
        }
        text << "solved " << box.node_count() << " nodes, step " << num(box.step()) << '\n';
        rep["nodes"] = box.node_count();
        rep["step"] = box.step();
        rep["columns"] = trace.columns;
        if (trace.space.order() >= 1) {
            bool enough = true;
            for (std::size_t c : box.counts()) enough = enough && c >= 3;
            if (enough) {
                double hd = holonomy_defect(trace);
                text << "holonomy defect = " << num(hd) << '\n';
                rep["holonomy_defect"] = hd;
            }
        }
        if (o.exact) {
            Expr exact = parse(*o.exact, {trace.space.base_names().begin(), trace.space.base_names().end()});
            double worst = 0.0;
            for (std::size_t node = 0; node < box.node_count(); ++node) {
                std::vector<double> x = box.point(box.multi(node));
                Binding b;
                for (std::size_t j = 0; j < x.size(); ++j) b[trace.space.base_names()[j]] = x[j];
                worst = std::max(worst, std::abs(trace.at(node, 0) - eval(exact, b)));
            }
            text << "max |" << trace.columns[0] << " - exact| = " << num(worst) << '\n';
            rep["max_abs_error"] = worst;
        }
        res.trace = std::move(trace);
    } else if (command == "paths") {
        Connection conn = pf.working_connection();
        std::vector<double> init = detail::resolve_point(pf, o.init, "init");
        if (!o.corner) throw Error("missing --corner");
        std::vector<double> corner = detail::parse_list(*o.corner, "--corner");
        if (!o.step) throw Error("missing --step");
        PathReport pr = path_dependence(conn, init, corner, *o.step);
        json paths = json::array();
        for (std::size_t i = 0; i < pr.orders.size(); ++i) {
            std::string name;
            for (std::size_t a : pr.orders[i]) name += (name.empty() ? "" : "->") + std::to_string(a + 1);
            text << "path " << name << ":";
            for (double v : pr.terminal[i]) text << ' ' << num(v);
            text << '\n';
            paths.push_back({{"order", name}, {"terminal", pr.terminal[i]}});
        }
        text << "discrepancy = " << num(pr.discrepancy) << '\n';
        rep["paths"] = paths;
        rep["discrepancy"] = pr.discrepancy;
    } else if (command == "eps-check") {
        const EpsilonSection& eps = detail::require_eps(pf);
        EpsilonReport er = epsilon_is_connection(eps, zopt);
        json defects = json::array();
        for (const auto& d : er.defects) {
            std::string label = detail::defect_label(pf.space, d.defect);
            defects.push_back({{"label", label}, {"verdict", detail::verdict_json(d.verdict)}});
            if (!d.verdict.is_zero()) text << label << " != 0 " << detail::witness_text(d.verdict) << '\n';
        }
        text << (er.is_connection ? "EPSILON IS A CONNECTION" : "EPSILON IS NOT A CONNECTION") << '\n';
        rep["is_connection"] = er.is_connection;
        rep["defects"] = defects;
        res.exit_code = er.is_connection ? 0 : 1;
    } else if (command == "phg-curvature") {
        const EpsilonSection& eps = detail::require_eps(pf);
        PhgCurvature pc = phg_curvature(eps);
        json cd = json::array(), fd = json::array();
        for (const ConnectionDefect& d : pc.connection_defect) {
            std::string label = detail::defect_label(pf.space, d);
            text << label << " = " << d.value.str() << '\n';
            cd.push_back({{"label", label}, {"expr", d.value.str()}});
        }
        for (const auto& c : pc.frobenius_defect.components()) {
            std::string label = pc.frobenius_defect.label(c);
            text << label << " = " << c.value.str() << '\n';
            fd.push_back({{"label", label}, {"expr", c.value.str()}});
        }
        bool vanishes = phg_curvature_vanishes(pc, zopt);
        text << "rank " << pc.rank << ", " << (vanishes ? "vanishes" : "does not vanish") << '\n';
        rep["connection_defect"] = cd;
        rep["frobenius_defect"] = fd;
        rep["rank"] = pc.rank;
        rep["vanishes"] = vanishes;
    } else if (command == "exactness-at") {
        const EpsilonSection& eps = detail::require_eps(pf);
        Binding p = pf.point_space().bind(detail::resolve_point(pf, o.at, "at"));
        ExactnessResult er = exactness_check_at(eps, p, o.tol);
        text << (er.preimage_exists ? "PREIMAGE EXISTS" : "NO PREIMAGE") << '\n'
             << "worst candidate gap = " << num(er.worst_gap) << '\n'
             << "max |curvature| at point = " << num(er.max_abs_curvature) << '\n';
        rep["preimage_exists"] = er.preimage_exists;
        rep["worst_gap"] = er.worst_gap;
        rep["max_abs_curvature"] = er.max_abs_curvature;
        res.exit_code = er.preimage_exists ? 0 : 1;
    } else {
        throw Error("unknown command '" + command + "'");
    }
    res.text = text.str();
    return res;
}

}  // namespace jetc
