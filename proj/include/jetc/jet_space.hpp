#pragma once

// Jet-space bookkeeping: symmetric multi-indices, the coordinate system of
// J^k(E), total derivatives and the canonical inclusion
// J^{k+1}(E) -> J^1(J^k(E)).
//
// Coordinate names: base coordinates keep their declared names (x1..xn by
// default); the jet y^a_mu is written <fiber>_<mu> with mu as a sorted digit
// string (y_12, y2_111); the order-zero jet is the bare fiber name.

#include <jetc/error.hpp>
#include <jetc/expr.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jetc {

// Canonical (sorted) multiset of 1-based base indices.
class MultiIndex {
public:
    MultiIndex() = default;

    explicit MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
        std::sort(entries_.begin(), entries_.end());
    }

    // Parses a digit string such as "112"; the empty string is the zero index.
    static MultiIndex from_digits(const std::string& digits) {
        std::vector<int> e;
        for (char c : digits) {
            if (c < '1' || c > '9') throw InvalidSpace("bad multi-index digit '" + std::string(1, c) + "'");
            e.push_back(c - '0');
        }
        return MultiIndex(std::move(e));
    }

    std::size_t order() const { return entries_.size(); }
    const std::vector<int>& entries() const { return entries_; }

    // mu + 1_j
    MultiIndex plus(int j) const {
        std::vector<int> e = entries_;
        e.insert(std::upper_bound(e.begin(), e.end(), j), j);
        MultiIndex r;
        r.entries_ = std::move(e);
        return r;
    }

    bool contains(int j) const { return std::binary_search(entries_.begin(), entries_.end(), j); }

    // mu - 1_j; requires contains(j).
    MultiIndex minus(int j) const {
        std::vector<int> e = entries_;
        e.erase(std::lower_bound(e.begin(), e.end(), j));
        MultiIndex r;
        r.entries_ = std::move(e);
        return r;
    }

    std::string digits() const {
        std::string s;
        for (int i : entries_) s += char('0' + i);
        return s;
    }

    friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<int> entries_;
};

// All multi-indices of the given order over 1..n, in lexicographic order.
inline std::vector<MultiIndex> multi_indices(int n, std::size_t order) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(order, 1);
    if (order == 0) return {MultiIndex{}};
    for (;;) {
        out.emplace_back(cur);
        // next non-decreasing sequence
        std::size_t i = order;
        while (i > 0 && cur[i - 1] == n) --i;
        if (i == 0) break;
        int v = cur[i - 1] + 1;
        for (std::size_t t = i - 1; t < order; ++t) cur[t] = v;
    }
    return out;
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// A fiber coordinate y^alpha_mu (alpha 0-based).
struct JetCoordinate {
    int alpha = 0;
    MultiIndex mu;
    friend auto operator<=>(const JetCoordinate&, const JetCoordinate&) = default;
};

struct JetLimits {
    int max_base = 4;
    int max_order = 6;
};

class JetSpace {
public:
    JetSpace() = default;

    JetSpace(std::vector<std::string> base_names, std::vector<std::string> fiber_names, int order,
             JetLimits limits = {})
        : base_(std::move(base_names)), fiber_(std::move(fiber_names)), order_(order), limits_(limits) {
        if (base_.empty()) throw InvalidSpace("base dimension must be at least 1");
        if (fiber_.empty()) throw InvalidSpace("fiber dimension must be at least 1");
        if (order_ < 0) throw InvalidSpace("jet order must be non-negative");
        if (int(base_.size()) > std::min(limits_.max_base, 9))
            throw InvalidSpace("base dimension " + std::to_string(base_.size()) + " exceeds limit");
        if (order_ > limits_.max_order)
            throw InvalidSpace("jet order " + std::to_string(order_) + " exceeds limit");
        build();
    }

    // x1..xn and y (m == 1) or y1..ym.
    static JetSpace standard(int n, int m, int k, JetLimits limits = {}) {
        std::vector<std::string> b, f;
        for (int i = 1; i <= n; ++i) b.push_back("x" + std::to_string(i));
        if (m == 1) f.push_back("y");
        else
            for (int a = 1; a <= m; ++a) f.push_back("y" + std::to_string(a));
        return JetSpace(b, f, k, limits);
    }

    JetSpace with_order(int k) const { return JetSpace(base_, fiber_, k, limits_); }

    int n() const { return int(base_.size()); }
    int m() const { return int(fiber_.size()); }
    int order() const { return order_; }
    const JetLimits& limits() const { return limits_; }
    const std::vector<std::string>& base_names() const { return base_; }
    const std::vector<std::string>& fiber_names() const { return fiber_; }

    // (|mu|, alpha, mu) ordering.
    const std::vector<JetCoordinate>& fiber_coordinates() const { return fiber_coords_; }

    // Base names followed by fiber coordinates.
    const std::vector<std::string>& coordinates() const { return names_; }

    std::size_t dimension() const { return names_.size(); }

    std::string coordinate_name(int alpha, const MultiIndex& mu) const {
        return mu.order() == 0 ? fiber_[std::size_t(alpha)] : fiber_[std::size_t(alpha)] + "_" + mu.digits();
    }

    std::string coordinate_name(const JetCoordinate& c) const { return coordinate_name(c.alpha, c.mu); }

    // Position of y^alpha_mu within fiber_coordinates().
    std::size_t fiber_index(int alpha, const MultiIndex& mu) const {
        auto it = fiber_lookup_.find(JetCoordinate{alpha, mu});
        if (it == fiber_lookup_.end()) throw InvalidSpace("jet coordinate outside J^" + std::to_string(order_));
        return it->second;
    }

    std::optional<JetCoordinate> find_fiber(const std::string& name) const {
        auto it = name_lookup_.find(name);
        if (it == name_lookup_.end() || it->second < base_.size()) return std::nullopt;
        return fiber_coords_[it->second - base_.size()];
    }

    std::optional<int> find_base(const std::string& name) const {
        auto it = name_lookup_.find(name);
        if (it == name_lookup_.end() || it->second >= base_.size()) return std::nullopt;
        return int(it->second);
    }

    bool has_coordinate(const std::string& name) const { return name_lookup_.contains(name); }

    std::size_t coordinate_position(const std::string& name) const {
        auto it = name_lookup_.find(name);
        if (it == name_lookup_.end()) throw UnknownVariable(name);
        return it->second;
    }

    std::set<std::string> coordinate_set() const { return {names_.begin(), names_.end()}; }

    Binding bind(const std::vector<double>& values) const {
        if (values.size() != names_.size())
            throw InvalidSpace("expected " + std::to_string(names_.size()) + " coordinate values, got " +
                               std::to_string(values.size()));
        Binding b;
        for (std::size_t i = 0; i < names_.size(); ++i) b[names_[i]] = values[i];
        return b;
    }

    std::vector<double> values(const Binding& b) const {
        std::vector<double> v;
        v.reserve(names_.size());
        for (const std::string& n : names_) {
            auto it = b.find(n);
            if (it == b.end()) throw UnknownVariable(n);
            v.push_back(it->second);
        }
        return v;
    }

private:
    void build() {
        names_ = base_;
        for (int k = 0; k <= order_; ++k)
            for (int a = 0; a < m(); ++a)
                for (const MultiIndex& mu : multi_indices(n(), std::size_t(k))) fiber_coords_.push_back({a, mu});
        for (std::size_t i = 0; i < fiber_coords_.size(); ++i) {
            fiber_lookup_[fiber_coords_[i]] = i;
            names_.push_back(coordinate_name(fiber_coords_[i]));
        }
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i].empty()) throw InvalidSpace("empty coordinate name");
            if (!name_lookup_.emplace(names_[i], i).second)
                throw InvalidSpace("duplicate coordinate name '" + names_[i] + "'");
        }
    }

    std::vector<std::string> base_;
    std::vector<std::string> fiber_;
    int order_ = 0;
    JetLimits limits_{};
    std::vector<JetCoordinate> fiber_coords_;
    std::vector<std::string> names_;
    std::map<JetCoordinate, std::size_t> fiber_lookup_;
    std::map<std::string, std::size_t> name_lookup_;
};

inline std::vector<std::string> enumerate_coordinates(const JetSpace& space) { return space.coordinates(); }

namespace detail {

inline void require_vars_in(const Expr& e, const JetSpace& space) {
    for (const std::string& v : free_variables(e))
        if (!space.has_coordinate(v)) throw UnknownVariable(v);
}

}  // namespace detail

// D_j e = de/dx^j + sum_{beta, |mu| <= k} de/dy^beta_mu * y^beta_{mu+1_j}.
// `space` is the J^k that e lives on; the result lives on J^{k+1}.
// j is 1-based.
inline Expr total_derivative(const JetSpace& space, const Expr& e, int j) {
    detail::require_vars_in(e, space);
    std::set<std::string> vars = free_variables(e);
    std::vector<Expr> parts;
    const std::string& xj = space.base_names()[std::size_t(j - 1)];
    if (vars.contains(xj)) parts.push_back(diff(e, xj));
    for (const JetCoordinate& c : space.fiber_coordinates()) {
        std::string name = space.coordinate_name(c);
        if (!vars.contains(name)) continue;
        parts.push_back(diff(e, name) * Expr::var(space.coordinate_name(c.alpha, c.mu.plus(j))));
    }
    if (parts.empty()) return Expr::integer(0);
    return simplify(Expr::make(Op::Add, std::move(parts)));
}

// One coordinate of J^1(J^k(E)) above the J^k coordinates: the derivative
// (y^alpha_mu),j. The canonical inclusion sends it to y^alpha_{mu+1_j}.
struct InclusionEntry {
    int alpha = 0;
    MultiIndex mu;
    int j = 0;
    std::string source;  // "<coord>,<j>", e.g. "y_1,2"
    MultiIndex target;
    std::string target_name;
};

// The canonical inclusion J^{k+1}(E) -> J^1(J^k(E)) as a coordinate map.
class CanonicalInclusion {
public:
    explicit CanonicalInclusion(const JetSpace& space) : lower_(space), upper_(space.with_order(space.order() + 1)) {
        for (const JetCoordinate& c : lower_.fiber_coordinates()) {
            for (int j = 1; j <= lower_.n(); ++j) {
                InclusionEntry e;
                e.alpha = c.alpha;
                e.mu = c.mu;
                e.j = j;
                e.source = lower_.coordinate_name(c) + "," + std::to_string(j);
                e.target = c.mu.plus(j);
                e.target_name = upper_.coordinate_name(c.alpha, e.target);
                entries_.push_back(std::move(e));
            }
        }
    }

    const JetSpace& lower() const { return lower_; }   // J^k
    const JetSpace& upper() const { return upper_; }   // J^{k+1}
    const std::vector<InclusionEntry>& entries() const { return entries_; }

    // Coordinates of J^1(J^k): J^k coordinates then the second layer.
    std::vector<std::string> iterated_coordinates() const {
        std::vector<std::string> names = lower_.coordinates();
        for (const InclusionEntry& e : entries_) names.push_back(e.source);
        return names;
    }

    // Image of a J^{k+1} point (values in upper().coordinates() order).
    std::vector<double> apply(const std::vector<double>& point) const {
        Binding b = upper_.bind(point);
        std::vector<double> out;
        for (const std::string& n : lower_.coordinates()) out.push_back(b.at(n));
        for (const InclusionEntry& e : entries_) out.push_back(b.at(e.target_name));
        return out;
    }

    // Inverse on the image: returns the J^{k+1} point when the iterated
    // point satisfies (y_mu),j = y_{mu+1_j} for |mu| < k and agrees across
    // every pair sharing a canonical top-order index; nullopt otherwise.
    std::optional<std::vector<double>> preimage(const std::vector<double>& iterated, double tol = 0.0) const {
        std::vector<std::string> names = iterated_coordinates();
        if (iterated.size() != names.size()) throw InvalidSpace("iterated point has wrong dimension");
        Binding lower_vals;
        for (std::size_t i = 0; i < lower_.dimension(); ++i) lower_vals[names[i]] = iterated[i];
        Binding upper_vals = lower_vals;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const InclusionEntry& e = entries_[i];
            double v = iterated[lower_.dimension() + i];
            auto [it, inserted] = upper_vals.emplace(e.target_name, v);
            if (!inserted && std::abs(it->second - v) > tol) return std::nullopt;
        }
        return upper_.values(upper_vals);
    }

private:
    JetSpace lower_;
    JetSpace upper_;
    std::vector<InclusionEntry> entries_;
};

inline CanonicalInclusion canonical_inclusion(const JetSpace& space) { return CanonicalInclusion(space); }

}  // namespace jetc
