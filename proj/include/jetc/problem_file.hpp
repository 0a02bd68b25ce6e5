#pragma once

// The line-oriented `.jet` problem format.
//
//     # comment
//     base 2 x1 x2
//     fiber 1 y
//     order 0
//     c[y;;1] = y              connection coefficient c[<fiber>;<mu>;<j>]
//     c[y;;2] = x1*y
//     point P: x1=0 x2=0 y=1
//     box B: x1=0:1 x2=0:1 step=0.01
//
// Other problem kinds replace the c[...] block: a solved-form PDE
// `f[<fiber>;<nu>] = ...` (|nu| = order) with an optional epsilon block
// `g[<fiber>;<sigma>] = ...` (|sigma| = order + 1), or geometric tops
// `ctop[<fiber>;<sigma>] = ...` (|sigma| = order + 1). Exactly one kind per
// file; every slot of the chosen kind must be present.

#include <jetc/connection.hpp>
#include <jetc/error.hpp>
#include <jetc/expr.hpp>
#include <jetc/jet_space.hpp>
#include <jetc/phg.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace jetc {

enum class ProblemKind { Connection, SolvedPde, Geometric };

inline const char* to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::Connection: return "connection";
        case ProblemKind::SolvedPde: return "solved-pde";
        default: return "geometric";
    }
}

struct NamedBox {
    std::vector<double> lo;
    std::vector<double> hi;
    std::optional<double> step;
};

struct ProblemFile {
    std::string source;
    JetSpace space;
    ProblemKind kind = ProblemKind::Connection;
    std::optional<Connection> connection;
    std::optional<SolvedPde> pde;
    std::optional<EpsilonSection> epsilon;
    std::optional<GeometricSpec> geometric;
    std::map<std::string, Binding> points;
    std::map<std::string, NamedBox> boxes;

    // The first-order system the analyses act on: the connection itself, the
    // geometric connection built from the tops, or the reduced PDE system.
    Connection working_connection() const {
        switch (kind) {
            case ProblemKind::Connection: return *connection;
            case ProblemKind::Geometric: return make_geometric(*geometric, source);
            default: return reduce_to_first_order(*pde, source);
        }
    }

    // Coordinates in which points and initial conditions are given.
    JetSpace point_space() const { return kind == ProblemKind::SolvedPde ? pde->lower_space() : space; }
};

namespace detail {

class ProblemParser {
public:
    explicit ProblemParser(std::string source) { file_.source = std::move(source); }

    ProblemFile parse(std::istream& in) {
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_no_;
            std::string line = raw.substr(0, raw.find('#'));
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            parse_line(line);
        }
        finish();
        return std::move(file_);
    }

private:
    [[noreturn]] void fail(std::size_t col, const std::string& what) const { throw ParseError(line_no_, col, what); }

    static std::vector<std::string> words(const std::string& s) {
        std::istringstream is(s);
        std::vector<std::string> w;
        std::string t;
        while (is >> t) w.push_back(t);
        return w;
    }

    static std::size_t first_col(const std::string& s) { return s.find_first_not_of(" \t") + 1; }

    void parse_line(const std::string& line) {
        std::vector<std::string> w = words(line);
        const std::string& head = w.front();
        if (head == "base" || head == "fiber") return parse_names(head, w, line);
        if (head == "order") {
            if (order_) throw DuplicateDefinition(line_no_, first_col(line), "order declared twice");
            if (w.size() != 2) fail(first_col(line), "expected 'order K'");
            order_ = to_int(w[1], line);
            if (*order_ < 0) fail(first_col(line), "order must be non-negative");
            return;
        }
        if (head == "point") return parse_point(line);
        if (head == "box") return parse_box(line);
        std::size_t bracket = line.find('[');
        if (bracket == std::string::npos) fail(first_col(line), "unknown directive '" + head + "'");
        std::string tag = trim(line.substr(0, bracket));
        if (tag == "c" || tag == "f" || tag == "g" || tag == "ctop") return parse_slot(tag, line, bracket);
        fail(first_col(line), "unknown coefficient block '" + tag + "'");
    }

    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    int to_int(const std::string& s, const std::string& line) const {
        try {
            std::size_t used = 0;
            int v = std::stoi(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        fail(line.find(s) + 1, "expected integer, got '" + s + "'");
    }

    double to_double(const std::string& s, std::size_t col) const {
        try {
            return eval(jetc::parse(s, {}), {});
        } catch (const Error& e) {
            fail(col, "expected number, got '" + s + "'");
        }
    }

    void parse_names(const std::string& head, const std::vector<std::string>& w, const std::string& line) {
        auto& target = head == "base" ? base_ : fiber_;
        if (target) throw DuplicateDefinition(line_no_, first_col(line), head + " declared twice");
        if (w.size() < 2) fail(first_col(line), "expected '" + head + " N names...'");
        int count = to_int(w[1], line);
        if (count < 1) fail(first_col(line), head + " dimension must be at least 1");
        std::vector<std::string> names(w.begin() + 2, w.end());
        if (names.empty()) {
            for (int i = 1; i <= count; ++i)
                names.push_back(head == "base" ? "x" + std::to_string(i) : (count == 1 ? "y" : "y" + std::to_string(i)));
        }
        if (int(names.size()) != count)
            fail(first_col(line), head + " declares " + std::to_string(count) + " names but lists " +
                                      std::to_string(names.size()));
        for (const std::string& n : names) {
            bool ok = !n.empty() && (std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_');
            for (char c : n) ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
            if (!ok) fail(line.find(n) + 1, "invalid coordinate name '" + n + "'");
        }
        target = names;
    }

    const JetSpace& space(std::size_t col) {
        if (!space_) {
            if (!base_ || !fiber_ || !order_) fail(col, "base, fiber and order must be declared first");
            try {
                space_ = JetSpace(*base_, *fiber_, *order_);
            } catch (const InvalidSpace& e) {
                fail(col, e.what());
            }
        }
        return *space_;
    }

    void set_kind(ProblemKind k, std::size_t col) {
        if (kind_ && *kind_ != k)
            throw DuplicateDefinition(line_no_, col,
                                      std::string("kind conflict: ") + to_string(*kind_) + " and " + to_string(k));
        kind_ = k;
    }

    void parse_slot(const std::string& tag, const std::string& line, std::size_t bracket) {
        std::size_t col = first_col(line);
        const JetSpace& s = space(col);
        std::size_t close = line.find(']', bracket);
        if (close == std::string::npos) fail(bracket + 1, "missing ']'");
        std::size_t eq = line.find('=', close);
        if (eq == std::string::npos) fail(close + 2, "expected '='");
        if (!trim(line.substr(close + 1, eq - close - 1)).empty()) fail(close + 2, "expected '='");

        std::vector<std::string> fields;
        {
            std::string inside = line.substr(bracket + 1, close - bracket - 1);
            std::size_t startf = 0;
            for (;;) {
                std::size_t semi = inside.find(';', startf);
                fields.push_back(trim(inside.substr(startf, semi == std::string::npos ? std::string::npos : semi - startf)));
                if (semi == std::string::npos) break;
                startf = semi + 1;
            }
        }
        std::size_t want = tag == "c" ? 3 : 2;
        if (fields.size() != want)
            fail(bracket + 1, tag + "[...] needs " + std::to_string(want) + " ';'-separated fields");

        const auto& fibers = s.fiber_names();
        auto fit = std::find(fibers.begin(), fibers.end(), fields[0]);
        if (fit == fibers.end()) throw UnknownCoordinate(line_no_, bracket + 2, fields[0]);
        int alpha = int(fit - fibers.begin());

        MultiIndex mu;
        for (char ch : fields[1])
            if (ch < '1' || ch > char('0' + s.n())) fail(bracket + 2, "multi-index digit out of range in '" + fields[1] + "'");
        mu = MultiIndex::from_digits(fields[1]);
        if (mu.digits() != fields[1]) fail(bracket + 2, "multi-index must be a sorted digit string, got '" + fields[1] + "'");

        int k = s.order();
        int j = 0;
        ProblemKind kind = ProblemKind::Connection;
        std::size_t want_order = 0;
        JetSpace coords = s;
        if (tag == "c") {
            j = to_int(fields[2], line);
            if (j < 1 || j > s.n()) fail(bracket + 2, "direction index out of range");
            if (int(mu.order()) > k) fail(bracket + 2, "c[...] multi-index order exceeds jet order");
            want_order = mu.order();
        } else if (tag == "ctop") {
            kind = ProblemKind::Geometric;
            want_order = std::size_t(k + 1);
        } else {
            kind = ProblemKind::SolvedPde;
            if (k < 1) fail(col, "a solved PDE needs order >= 1");
            want_order = std::size_t(tag == "f" ? k : k + 1);
            coords = s.with_order(k - 1);
        }
        if (mu.order() != want_order)
            fail(bracket + 2, tag + "[...] needs a multi-index of order " + std::to_string(want_order));
        set_kind(kind, col);

        std::string key = tag + "[" + fields[0] + ";" + fields[1] + (tag == "c" ? ";" + std::to_string(j) : "") + "]";
        if (seen_.contains(key)) throw DuplicateDefinition(line_no_, col, key + " defined twice");
        seen_.insert(key);

        std::string text = line.substr(eq + 1);
        Expr e;
        try {
            e = jetc::parse(text, coords.coordinate_set());
        } catch (const UnknownVariable& u) {
            throw UnknownCoordinate(line_no_, eq + 2 + text.find(u.name), u.name);
        } catch (const SyntaxError& se) {
            fail(eq + 2 + se.position, "expected " + se.expected);
        }
        if (tag == "c") c_[{alpha, mu, j}] = e;
        else if (tag == "f") f_[{alpha, mu}] = e;
        else if (tag == "g") g_[{alpha, mu}] = e;
        else ctop_[{alpha, mu}] = e;
    }

    // point NAME: coord=value ...
    void parse_point(const std::string& line) {
        auto [name, rest, rest_col] = named(line, "point");
        if (file_.points.contains(name)) throw DuplicateDefinition(line_no_, first_col(line), "point " + name + " defined twice");
        Binding b;
        std::istringstream is(rest);
        std::string tok;
        while (is >> tok) {
            std::size_t col = rest_col + rest.find(tok);
            auto eq = tok.find('=');
            if (eq == std::string::npos) fail(col, "expected coord=value");
            std::string coord = tok.substr(0, eq);
            if (b.contains(coord)) throw DuplicateDefinition(line_no_, col, coord + " assigned twice");
            b[coord] = to_double(tok.substr(eq + 1), col + eq + 1);
            pending_coords_.push_back({coord, line_no_, col});
        }
        file_.points[name] = std::move(b);
    }

    // box NAME: coord=lo:hi ... [step=h]
    void parse_box(const std::string& line) {
        auto [name, rest, rest_col] = named(line, "box");
        if (file_.boxes.contains(name)) throw DuplicateDefinition(line_no_, first_col(line), "box " + name + " defined twice");
        std::map<std::string, std::pair<double, double>> ranges;
        NamedBox box;
        std::istringstream is(rest);
        std::string tok;
        while (is >> tok) {
            std::size_t col = rest_col + rest.find(tok);
            auto eq = tok.find('=');
            if (eq == std::string::npos) fail(col, "expected coord=lo:hi or step=h");
            std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "step") {
                box.step = to_double(val, col + eq + 1);
                continue;
            }
            auto colon = val.find(':');
            if (colon == std::string::npos) fail(col + eq + 1, "expected lo:hi");
            ranges[key] = {to_double(val.substr(0, colon), col), to_double(val.substr(colon + 1), col)};
            pending_coords_.push_back({key, line_no_, col});
        }
        pending_boxes_.push_back({name, ranges, line_no_});
        file_.boxes[name] = box;
    }

    std::tuple<std::string, std::string, std::size_t> named(const std::string& line, const std::string& word) {
        std::size_t start = line.find(word) + word.size();
        std::size_t colon = line.find(':', start);
        if (colon == std::string::npos) fail(start + 1, "expected '" + word + " NAME: ...'");
        std::string name = trim(line.substr(start, colon - start));
        if (name.empty()) fail(start + 1, "missing " + word + " name");
        return {name, line.substr(colon + 1), colon + 2};
    }

    void finish() {
        if (!base_) fail(0, "missing 'base' declaration");
        if (!fiber_) fail(0, "missing 'fiber' declaration");
        if (!order_) fail(0, "missing 'order' declaration");
        const JetSpace& s = space(0);
        if (!kind_) fail(0, "no coefficient block (c, f or ctop)");
        file_.space = s;
        file_.kind = *kind_;
        const auto& fibers = s.fiber_names();
        switch (*kind_) {
            case ProblemKind::Connection:
                for (const JetCoordinate& c : s.fiber_coordinates())
                    for (int j = 1; j <= s.n(); ++j)
                        if (!c_.contains({c.alpha, c.mu, j}))
                            throw MissingCoefficient("c[" + fibers[std::size_t(c.alpha)] + ";" + c.mu.digits() + ";" +
                                                     std::to_string(j) + "]");
                file_.connection = Connection::from_slots(s, c_, file_.source);
                break;
            case ProblemKind::Geometric:
                require_all(s, ctop_, "ctop", std::size_t(s.order() + 1));
                file_.geometric = GeometricSpec(s, ctop_);
                break;
            case ProblemKind::SolvedPde:
                require_all(s, f_, "f", std::size_t(s.order()));
                file_.pde = SolvedPde(s, f_);
                if (!g_.empty()) {
                    require_all(s, g_, "g", std::size_t(s.order() + 1));
                    file_.epsilon = EpsilonSection(*file_.pde, g_);
                }
                break;
        }
        JetSpace ps = file_.point_space();
        for (const auto& [coord, line, col] : pending_coords_)
            if (!ps.has_coordinate(coord)) throw UnknownCoordinate(line, col, coord);
        for (const auto& [name, ranges, line] : pending_boxes_) {
            NamedBox& box = file_.boxes[name];
            for (const std::string& b : s.base_names()) {
                auto it = ranges.find(b);
                if (it == ranges.end()) throw ParseError(line, 0, "box " + name + " has no range for " + b);
                box.lo.push_back(it->second.first);
                box.hi.push_back(it->second.second);
            }
            for (const auto& [coord, r] : ranges)
                if (!s.find_base(coord)) throw UnknownCoordinate(line, 0, coord);
        }
    }

    static void require_all(const JetSpace& s, const IndexedExprs& table, const std::string& tag, std::size_t order) {
        for (int a = 0; a < s.m(); ++a)
            for (const MultiIndex& mu : multi_indices(s.n(), order))
                if (!table.contains({a, mu}))
                    throw MissingCoefficient(tag + "[" + s.fiber_names()[std::size_t(a)] + ";" + mu.digits() + "]");
    }

    struct PendingCoord {
        std::string coord;
        std::size_t line;
        std::size_t col;
    };
    struct PendingBox {
        std::string name;
        std::map<std::string, std::pair<double, double>> ranges;
        std::size_t line;
    };

    ProblemFile file_;
    std::size_t line_no_ = 0;
    std::optional<std::vector<std::string>> base_, fiber_;
    std::optional<int> order_;
    std::optional<JetSpace> space_;
    std::optional<ProblemKind> kind_;
    std::set<std::string> seen_;
    std::map<std::tuple<int, MultiIndex, int>, Expr> c_;
    IndexedExprs f_, g_, ctop_;
    std::vector<PendingCoord> pending_coords_;
    std::vector<PendingBox> pending_boxes_;
};

}  // namespace detail

inline ProblemFile load_string(const std::string& text, std::string source = "<string>") {
    std::istringstream in(text);
    return detail::ProblemParser(std::move(source)).parse(in);
}

inline ProblemFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return detail::ProblemParser(path).parse(in);
}

}  // namespace jetc
