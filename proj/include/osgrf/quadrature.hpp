#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace osgrf {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Supported sizes: 6, 10, 20.
const GaussRule& gauss_legendre(int points);

using Panel = std::pair<double, double>;

// Panels on [0, hi]: dyadic intervals [hi 2^{-i-1}, hi 2^{-i}] for i < levels,
// then [0, hi 2^{-levels}]. Each interval is split evenly so that no piece is
// wider than width_cap(left end).
std::vector<Panel> graded_panels(double hi, int levels, const std::function<double(double)>& width_cap);

// Same grading applied toward `lo` on [lo, hi] (panels accumulate at lo).
std::vector<Panel> graded_panels(double lo, double hi, int levels, const std::function<double(double)>& width_cap);

// Nodes and weights of a composite rule.
struct NodeSet {
    std::vector<double> x;
    std::vector<double> w;

    void add_panel(const Panel& p, const GaussRule& rule);
    void add_panels(const std::vector<Panel>& panels, const GaussRule& rule);
    void mirror(); // adds (-x, w) for every node
    std::size_t size() const noexcept { return x.size(); }
};

} // namespace osgrf
