#pragma once

// Gridded numeric sections and their holonomy diagnostics.

#include <jetc/error.hpp>
#include <jetc/jet_space.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace jetc {

// Axis-aligned box sampled with a uniform step on every axis.
class GridBox {
public:
    GridBox() = default;

    GridBox(std::vector<double> lo, std::vector<double> hi, double step)
        : lo_(std::move(lo)), hi_(std::move(hi)), step_(step) {
        if (lo_.size() != hi_.size() || lo_.empty()) throw InvalidGrid("box bounds must have matching, nonzero length");
        if (!(step_ > 0.0) || !std::isfinite(step_)) throw InvalidGrid("grid step must be positive");
        for (std::size_t j = 0; j < lo_.size(); ++j) {
            if (!(lo_[j] < hi_[j])) throw InvalidGrid("box axis " + std::to_string(j + 1) + " has lo >= hi");
            double cells = (hi_[j] - lo_[j]) / step_;
            double rounded = std::round(cells);
            if (std::abs(cells - rounded) > 1e-6 * std::max(1.0, cells))
                throw InvalidGrid("step does not divide box axis " + std::to_string(j + 1));
            counts_.push_back(std::size_t(rounded) + 1);
        }
    }

    std::size_t dims() const { return lo_.size(); }
    const std::vector<double>& lo() const { return lo_; }
    const std::vector<double>& hi() const { return hi_; }
    double step() const { return step_; }
    const std::vector<std::size_t>& counts() const { return counts_; }

    std::size_t node_count() const {
        std::size_t c = 1;
        for (std::size_t n : counts_) c *= n;
        return c;
    }

    double coordinate(std::size_t axis, std::size_t i) const {
        if (i + 1 == counts_[axis]) return hi_[axis];
        return lo_[axis] + double(i) * step_;
    }

    // Lexicographic: axis 1 varies slowest.
    std::size_t linear(const std::vector<std::size_t>& idx) const {
        std::size_t l = 0;
        for (std::size_t j = 0; j < counts_.size(); ++j) l = l * counts_[j] + idx[j];
        return l;
    }

    std::vector<std::size_t> multi(std::size_t linear) const {
        std::vector<std::size_t> idx(counts_.size());
        for (std::size_t j = counts_.size(); j-- > 0;) {
            idx[j] = linear % counts_[j];
            linear /= counts_[j];
        }
        return idx;
    }

    std::vector<double> point(const std::vector<std::size_t>& idx) const {
        std::vector<double> x(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) x[j] = coordinate(j, idx[j]);
        return x;
    }

private:
    std::vector<double> lo_;
    std::vector<double> hi_;
    double step_ = 0.0;
    std::vector<std::size_t> counts_;
};

struct TraceMetadata {
    std::string connection_id;
    std::vector<double> init;
    double step = 0.0;
    std::string integrator = "RK4";
};

// Values of every fiber coordinate of `space` at every node of `box`.
struct SolutionTrace {
    GridBox box;
    JetSpace space;
    std::vector<std::string> columns;  // fiber coordinate names, space order
    std::vector<double> values;        // node-major
    TraceMetadata metadata;

    std::size_t width() const { return columns.size(); }
    double at(std::size_t node, std::size_t column) const { return values[node * width() + column]; }

    // Header: base names then fiber columns; one row per node in lexicographic
    // node order; 17 significant digits.
    void write_csv(std::ostream& out) const {
        bool first = true;
        for (const std::string& b : space.base_names()) {
            out << (first ? "" : ",") << b;
            first = false;
        }
        for (const std::string& c : columns) out << ',' << c;
        out << '\n';
        char buf[40];
        for (std::size_t node = 0; node < box.node_count(); ++node) {
            std::vector<double> x = box.point(box.multi(node));
            for (std::size_t j = 0; j < x.size(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", x[j]);
                out << (j ? "," : "") << buf;
            }
            for (std::size_t c = 0; c < width(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", at(node, c));
                out << ',' << buf;
            }
            out << '\n';
        }
    }
};

// max over fully interior nodes and (alpha, mu, j) with |mu| < k of
// |central difference along x^j of y^alpha_mu - y^alpha_{mu+1_j}|.
inline double holonomy_defect(const SolutionTrace& trace) {
    const JetSpace& space = trace.space;
    if (space.order() < 1) throw InvalidSpace("holonomy defect needs jet order >= 1");
    const GridBox& box = trace.box;
    for (std::size_t c : box.counts())
        if (c < 3) throw GridTooSmall("holonomy defect needs at least 3 nodes per axis");

    struct Pair {
        std::size_t low, high;
        std::size_t axis;
    };
    std::vector<Pair> pairs;
    for (const JetCoordinate& c : space.fiber_coordinates()) {
        if (int(c.mu.order()) >= space.order()) continue;
        for (int j = 1; j <= space.n(); ++j)
            pairs.push_back({space.fiber_index(c.alpha, c.mu), space.fiber_index(c.alpha, c.mu.plus(j)), std::size_t(j - 1)});
    }

    double worst = 0.0;
    for (std::size_t node = 0; node < box.node_count(); ++node) {
        std::vector<std::size_t> idx = box.multi(node);
        bool interior = true;
        for (std::size_t j = 0; j < idx.size(); ++j) interior = interior && idx[j] > 0 && idx[j] + 1 < box.counts()[j];
        if (!interior) continue;
        for (const Pair& p : pairs) {
            std::vector<std::size_t> fwd = idx, bwd = idx;
            ++fwd[p.axis];
            --bwd[p.axis];
            double dx = box.coordinate(p.axis, fwd[p.axis]) - box.coordinate(p.axis, bwd[p.axis]);
            double central = (trace.at(box.linear(fwd), p.low) - trace.at(box.linear(bwd), p.low)) / dx;
            worst = std::max(worst, std::abs(central - trace.at(node, p.high)));
        }
    }
    return worst;
}

}  // namespace jetc
