#include "osgrf/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "osgrf/errors.hpp"

namespace osgrf {

namespace {

template <unsigned N>
GaussRule make_rule()
{
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    GaussRule r;
    // Boost stores the nonnegative half; index 0 is the center for odd N.
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.nodes.push_back(0.0);
            r.weights.push_back(w[i]);
            continue;
        }
        r.nodes.push_back(a[i]);
        r.weights.push_back(w[i]);
        r.nodes.push_back(-a[i]);
        r.weights.push_back(w[i]);
    }
    return r;
}

} // namespace

const GaussRule& gauss_legendre(int points)
{
    static const GaussRule g6 = make_rule<6>();
    static const GaussRule g10 = make_rule<10>();
    static const GaussRule g20 = make_rule<20>();
    switch (points) {
    case 6: return g6;
    case 10: return g10;
    case 20: return g20;
    default: throw InternalError("unsupported Gauss-Legendre size " + std::to_string(points));
    }
}

std::vector<Panel> graded_panels(double lo, double hi, int levels, const std::function<double(double)>& width_cap)
{
    std::vector<Panel> out;
    const double len = hi - lo;
    auto split = [&](double a, double b) {
        const double cap = width_cap ? width_cap(a) : INFINITY;
        const double pieces = std::isfinite(cap) && cap > 0 ? std::ceil((b - a) / cap) : 1.0;
        const auto m = static_cast<long>(std::max(1.0, pieces));
        for (long i = 0; i < m; ++i) {
            out.emplace_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(m),
                             i + 1 == m ? b : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(m));
        }
    };
    for (int i = 0; i < levels; ++i) {
        split(lo + len * std::ldexp(1.0, -i - 1), lo + len * std::ldexp(1.0, -i));
    }
    out.emplace_back(lo, lo + len * std::ldexp(1.0, -levels));
    return out;
}

std::vector<Panel> graded_panels(double hi, int levels, const std::function<double(double)>& width_cap)
{
    return graded_panels(0.0, hi, levels, width_cap);
}

void NodeSet::add_panel(const Panel& p, const GaussRule& rule)
{
    const double c = 0.5 * (p.first + p.second);
    const double h = 0.5 * (p.second - p.first);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        x.push_back(c + h * rule.nodes[i]);
        w.push_back(h * rule.weights[i]);
    }
}

void NodeSet::add_panels(const std::vector<Panel>& panels, const GaussRule& rule)
{
    for (const auto& p : panels) add_panel(p, rule);
}

void NodeSet::mirror()
{
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        x.push_back(-x[i]);
        w.push_back(w[i]);
    }
}

} // namespace osgrf
