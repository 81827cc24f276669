#include "osgrf/qtable.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "osgrf/errors.hpp"
#include "osgrf/quadrature.hpp"

namespace osgrf {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

std::size_t checked_cells(int d, std::int64_t side, std::size_t max_cells)
{
    double cells = 1.0;
    for (int a = 0; a < d; ++a) cells *= static_cast<double>(side);
    if (cells > static_cast<double>(max_cells)) {
        throw ResourceError("q-table of " + std::to_string(static_cast<long double>(cells)) +
                            " cells exceeds the cell budget of " + std::to_string(max_cells));
    }
    return static_cast<std::size_t>(cells);
}

LatticePoint unravel(std::size_t idx, int d, std::int64_t side)
{
    LatticePoint k{};
    for (int a = 0; a < d; ++a) {
        k[a] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(side));
        idx /= static_cast<std::size_t>(side);
    }
    return k;
}

// Odometer over a box [lo, hi] (inclusive) in the first d axes.
template <class F>
void for_box(int d, const LatticePoint& lo, const LatticePoint& hi, F&& f)
{
    for (int a = 0; a < d; ++a) {
        if (hi[a] < lo[a]) return;
    }
    LatticePoint k = lo;
    while (true) {
        f(k);
        int a = 0;
        for (; a < d; ++a) {
            if (++k[a] <= hi[a]) break;
            k[a] = lo[a];
        }
        if (a == d) return;
    }
}

std::vector<double> axis_pmf_table(const SpectralModel& model, int axis, std::int64_t n)
{
    std::vector<double> p(static_cast<std::size_t>(n + 1), 0.0);
    for (std::int64_t j = 1; j <= n; ++j) p[static_cast<std::size_t>(j)] = model.axis_pmf(axis, j);
    return p;
}

void finish_table(QTable& t)
{
    double s = 0.0;
    for (double v : t.values) s += v * v;
    t.sum_sq = s;
    t.diagonal_monotone = true;
    double prev = INFINITY;
    for (std::int64_t i = 2; i <= t.extent; ++i) {
        LatticePoint k{};
        for (int a = 0; a < t.dim; ++a) k[a] = i;
        const double v = t.at(k);
        if (v > prev * (1.0 + 1e-12)) t.diagonal_monotone = false;
        prev = v;
    }
}

// out[k] = sum_{j=1}^{k} p[j] in[k-j] along one axis of a (side^dims) array.
void convolve_axis(const std::vector<double>& in, std::vector<double>& out, const std::vector<double>& p,
                   int dims, int axis, std::int64_t side)
{
    const auto S = static_cast<std::size_t>(side);
    std::size_t stride = 1;
    for (int a = 0; a < axis; ++a) stride *= S;
    std::size_t total = 1;
    for (int a = 0; a < dims; ++a) total *= S;
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t outer = total / (stride * S);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
            const std::size_t base = o * stride * S + inner;
            for (std::size_t k = 1; k < S; ++k) {
                double acc = 0.0;
                for (std::size_t j = 1; j <= k; ++j) acc += p[j] * in[base + (k - j) * stride];
                out[base + k * stride] = acc;
            }
        }
    }
}

} // namespace

std::size_t QTable::index(const LatticePoint& k) const noexcept
{
    std::size_t idx = 0;
    for (int a = dim - 1; a >= 0; --a) idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(k[a]);
    return idx;
}

double QTable::at(const LatticePoint& k) const noexcept
{
    for (int a = 0; a < dim; ++a) {
        if (k[a] < 0 || k[a] > extent) return 0.0;
    }
    return values[index(k)];
}

QTable build_qtable(const SpectralModel& model, std::int64_t extent, std::size_t max_cells)
{
    if (extent < 1) throw DomainError("q-table extent must be >= 1");
    const int d = model.dim();
    const std::int64_t side = extent + 1;
    QTable t;
    t.dim = d;
    t.extent = extent;
    t.pmf_tail_mass = model.tail_mass_outside_box(extent);
    const std::size_t cells = checked_cells(d, side, max_cells);

    if (model.family() == StepFamily::CustomPmf) {
        t.values.assign(cells, 0.0);
        t.values[0] = 1.0;
        for (std::size_t idx = 1; idx < cells; ++idx) {
            const LatticePoint k = unravel(idx, d, side);
            double acc = 0.0;
            for (const auto& e : model.table()) {
                bool fits = e.prob > 0.0;
                for (int a = 0; a < d && fits; ++a) fits = e.k[a] <= k[a];
                if (fits) acc += e.prob * t.values[idx - t.index(e.k)];
            }
            t.values[idx] = acc;
        }
        finish_table(t);
        return t;
    }

    std::vector<std::vector<double>> p;
    for (int a = 0; a < d; ++a) p.push_back(axis_pmf_table(model, a, extent));

    if (d == 1) {
        t.values.assign(cells, 0.0);
        t.values[0] = 1.0;
        for (std::size_t k = 1; k < cells; ++k) {
            double acc = 0.0;
            for (std::size_t j = 1; j <= k; ++j) acc += p[0][j] * t.values[k - j];
            t.values[k] = acc;
        }
        finish_table(t);
        return t;
    }

    // Slices along the last axis. R_m is slice m convolved over the leading
    // axes; slice m then only needs R_0..R_{m-1}.
    checked_cells(d, side, max_cells / 2);
    const std::size_t slice = cells / static_cast<std::size_t>(side);
    t.values.assign(cells, 0.0);
    std::vector<double> R(cells, 0.0);
    std::vector<double> a_buf(slice), b_buf(slice);
    const std::vector<double>& plast = p[static_cast<std::size_t>(d - 1)];
    for (std::int64_t m = 0; m < side; ++m) {
        double* qm = t.values.data() + static_cast<std::size_t>(m) * slice;
        if (m == 0) {
            qm[0] = 1.0;
        } else {
            for (std::int64_t j = 1; j <= m; ++j) {
                const double pj = plast[static_cast<std::size_t>(j)];
                const double* r = R.data() + static_cast<std::size_t>(m - j) * slice;
                for (std::size_t i = 0; i < slice; ++i) qm[i] += pj * r[i];
            }
        }
        std::copy(qm, qm + slice, a_buf.begin());
        for (int a = 0; a < d - 1; ++a) {
            convolve_axis(a_buf, b_buf, p[static_cast<std::size_t>(a)], d - 1, a, side);
            std::swap(a_buf, b_buf);
        }
        std::copy(a_buf.begin(), a_buf.end(), R.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(m) * slice));
    }
    finish_table(t);
    return t;
}

QTable build_qtable_direct(const SpectralModel& model, std::int64_t extent, std::size_t max_cells)
{
    if (extent < 1) throw DomainError("q-table extent must be >= 1");
    const int d = model.dim();
    const std::int64_t side = extent + 1;
    QTable t;
    t.dim = d;
    t.extent = extent;
    t.pmf_tail_mass = model.tail_mass_outside_box(extent);
    const std::size_t cells = checked_cells(d, side, max_cells);
    t.values.assign(cells, 0.0);
    t.values[0] = 1.0;
    LatticePoint one{};
    for (int a = 0; a < d; ++a) one[a] = 1;
    for (std::size_t idx = 1; idx < cells; ++idx) {
        const LatticePoint k = unravel(idx, d, side);
        double acc = 0.0;
        for_box(d, one, k, [&](const LatticePoint& j) {
            LatticePoint r{};
            for (int a = 0; a < d; ++a) r[a] = k[a] - j[a];
            acc += model.pmf(j) * t.values[t.index(r)];
        });
        t.values[idx] = acc;
    }
    finish_table(t);
    return t;
}

double recursion_residual(const SpectralModel& model, const QTable& table)
{
    const QTable ref = build_qtable_direct(model, table.extent, table.cells() + 1);
    double worst = std::abs(table.values[0] - 1.0);
    for (std::size_t i = 1; i < table.cells(); ++i) worst = std::max(worst, std::abs(table.values[i] - ref.values[i]));
    return worst;
}

double sigma_x2_from_sum_sq(double sum_sq, double p)
{
    if (!(sum_sq > 0.0)) throw DomainError("sum of squares must be positive");
    return 4.0 * p * (1.0 - p) / sum_sq;
}

double sigma_x2(const QTable& table, double p) { return sigma_x2_from_sum_sq(table.sum_sq, p); }

PairMeeting pair_meeting_prob(const QTable& table, const LatticePoint& offset)
{
    const int d = table.dim;
    LatticePoint lo{}, hi{};
    for (int a = 0; a < d; ++a) {
        lo[a] = std::max<std::int64_t>(0, -offset[a]);
        hi[a] = std::min<std::int64_t>(table.extent, table.extent - offset[a]);
    }
    double num = 0.0, outer = 0.0;
    const std::int64_t half = table.extent / 2;
    for_box(d, lo, hi, [&](const LatticePoint& k) {
        LatticePoint k2{};
        bool in_outer = false;
        for (int a = 0; a < d; ++a) {
            k2[a] = k[a] + offset[a];
            in_outer = in_outer || k[a] > half || k2[a] > half;
        }
        const double v = table.values[table.index(k)] * table.values[table.index(k2)];
        num += v;
        if (in_outer) outer += v;
    });
    PairMeeting r;
    r.numerator = num;
    r.value = num / table.sum_sq;
    r.residue = num > 0.0 ? outer / num : 0.0;
    return r;
}

namespace {

// Per-axis node sets on [-pi, pi] (or [0, pi] for the halved axis), one per rule.
struct AxisNodes {
    NodeSet hi, lo;
};

AxisNodes make_axis_nodes(bool half, int levels, const std::function<double(double)>& cap)
{
    AxisNodes n;
    const auto panels = graded_panels(kPi, levels, cap);
    n.hi.add_panels(panels, gauss_legendre(10));
    n.lo.add_panels(panels, gauss_legendre(6));
    if (half) {
        for (auto& w : n.hi.w) w *= 2.0;
        for (auto& w : n.lo.w) w *= 2.0;
    } else {
        n.hi.mirror();
        n.lo.mirror();
    }
    return n;
}

// sum over the tensor grid of prod(w) * f(index tuple).
template <class F>
double tensor_sum(const std::vector<const NodeSet*>& axes, F&& f)
{
    const int d = static_cast<int>(axes.size());
    std::array<std::size_t, kMaxDim> idx{};
    double total = 0.0;
    if (d == 1) {
        const auto& ax = *axes[0];
        for (std::size_t i = 0; i < ax.size(); ++i) {
            idx[0] = i;
            total += ax.w[i] * f(idx);
        }
        return total;
    }
    // innermost loop on axis 0; partial sums per outer index for stable accumulation
    while (true) {
        double w_outer = 1.0;
        for (int a = 1; a < d; ++a) w_outer *= axes[static_cast<std::size_t>(a)]->w[idx[a]];
        double inner = 0.0;
        const auto& ax0 = *axes[0];
        for (std::size_t i = 0; i < ax0.size(); ++i) {
            idx[0] = i;
            inner += ax0.w[i] * f(idx);
        }
        total += w_outer * inner;
        int a = 1;
        for (; a < d; ++a) {
            if (++idx[a] < axes[static_cast<std::size_t>(a)]->size()) break;
            idx[a] = 0;
        }
        if (a == d) return total;
    }
}

void check_tensor_budget(const std::vector<const NodeSet*>& axes)
{
    double n = 1.0;
    for (const auto* a : axes) n *= static_cast<double>(a->size());
    if (n > 4e8) throw ResourceError("spectral quadrature grid of " + std::to_string(n) + " points exceeds budget 4e8");
}

// 1 - P_N on one axis: tail mass plus sum_{n<=N} p_n (1 - e^{ixn}).
cplx truncated_axis_one_minus_P(const std::vector<double>& p, double tail, double x)
{
    double re = tail, im = 0.0;
    const cplx step = std::polar(1.0, x);
    cplx w = step;
    const std::size_t n_max = p.size() - 1;
    for (std::size_t n = 1; n <= n_max; ++n) {
        re += p[n] * (1.0 - w.real());
        im -= p[n] * w.imag();
        if ((n & 255) == 0) w = std::polar(1.0, x * static_cast<double>(n + 1));
        else w *= step;
    }
    return {re, im};
}

cplx fold_one_minus_product(const cplx* u, int d)
{
    cplx r(0.0, 0.0);
    for (int a = 0; a < d; ++a) r = r + u[a] - r * u[a];
    return r;
}

// Values of 1 - P on every tensor node, separable (product) or direct (custom).
struct OneMinusPGrid {
    std::vector<std::vector<cplx>> axis; // product models
    bool separable = true;
};

template <class AxisFn>
OneMinusPGrid axis_values(const std::vector<const NodeSet*>& axes, AxisFn&& fn)
{
    OneMinusPGrid g;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        std::vector<cplx> v(axes[a]->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(static_cast<int>(a), axes[a]->x[i]);
        g.axis.push_back(std::move(v));
    }
    return g;
}

} // namespace

ParsevalResult parseval_check(const SpectralModel& model, const QTable& table, const QuadratureConfig& cfg)
{
    const int d = model.dim();
    const double N = static_cast<double>(table.extent);
    auto cap = [&](double a) { return a < 64.0 / N ? std::min(cfg.max_width, kPi / N) : cfg.max_width; };
    std::vector<AxisNodes> nodes;
    for (int a = 0; a < d; ++a) nodes.push_back(make_axis_nodes(a == d - 1, cfg.levels, cap));

    std::vector<std::vector<double>> pmf;
    std::vector<double> tails;
    if (model.family() == StepFamily::ProductPareto) {
        for (int a = 0; a < d; ++a) {
            pmf.push_back(axis_pmf_table(model, a, table.extent));
            tails.push_back(model.axis_tail(a, table.extent + 1));
        }
    }

    ParsevalResult res;
    res.sum_sq = table.sum_sq;
    double results[2] = {0.0, 0.0};
    for (int rule = 0; rule < 2; ++rule) {
        std::vector<const NodeSet*> axes;
        for (int a = 0; a < d; ++a) axes.push_back(rule == 0 ? &nodes[a].hi : &nodes[a].lo);
        check_tensor_budget(axes);
        double integral = 0.0;
        if (model.family() == StepFamily::ProductPareto) {
            auto g = axis_values(axes, [&](int a, double x) {
                return truncated_axis_one_minus_P(pmf[static_cast<std::size_t>(a)], tails[static_cast<std::size_t>(a)], x);
            });
            integral = tensor_sum(axes, [&](const std::array<std::size_t, kMaxDim>& idx) {
                cplx u[kMaxDim];
                for (int a = 0; a < d; ++a) u[a] = g.axis[static_cast<std::size_t>(a)][idx[a]];
                return 1.0 / std::norm(fold_one_minus_product(u, d));
            });
        } else {
            integral = tensor_sum(axes, [&](const std::array<std::size_t, kMaxDim>& idx) {
                std::vector<double> x(static_cast<std::size_t>(d));
                for (int a = 0; a < d; ++a) x[a] = axes[static_cast<std::size_t>(a)]->x[idx[a]];
                return 1.0 / std::norm(model.one_minus_P_truncated(x, table.extent));
            });
        }
        results[rule] = integral / std::pow(2.0 * kPi, d);
        res.evaluations += [&] {
            std::size_t n = 1;
            for (const auto* a : axes) n *= a->size();
            return n;
        }();
    }
    res.integral = results[0];
    res.quad_error = std::abs(results[0] - results[1]);
    res.discrepancy = std::abs(res.sum_sq - res.integral) / res.sum_sq;
    if (res.quad_error > cfg.rel_tol * std::abs(res.integral)) {
        throw NumericalError("Parseval quadrature did not converge: estimate " + std::to_string(res.integral) +
                             ", error " + std::to_string(res.quad_error) + ", " + std::to_string(res.evaluations) +
                             " evaluations");
    }
    return res;
}

namespace {

// (2pi)^{-d} int Re(prod_a k_a(x_a)) / |1 - P(x)|^2 with the exact P.
template <class KernelFn>
SpectralSum exact_spectral_integral(const SpectralModel& model, const QuadratureConfig& cfg,
                                    const std::function<double(double)>& cap, KernelFn&& kernel)
{
    const int d = model.dim();
    if (d > 2) throw DomainError("exact spectral sums are implemented for d <= 2");
    std::vector<AxisNodes> nodes;
    for (int a = 0; a < d; ++a) nodes.push_back(make_axis_nodes(a == d - 1, cfg.levels, cap));
    double results[2] = {0.0, 0.0};
    for (int rule = 0; rule < 2; ++rule) {
        std::vector<const NodeSet*> axes;
        for (int a = 0; a < d; ++a) axes.push_back(rule == 0 ? &nodes[a].hi : &nodes[a].lo);
        check_tensor_budget(axes);
        std::vector<std::vector<cplx>> kern(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) {
            for (double x : axes[static_cast<std::size_t>(a)]->x) kern[static_cast<std::size_t>(a)].push_back(kernel(a, x));
        }
        double integral = 0.0;
        if (model.family() == StepFamily::ProductPareto) {
            std::vector<ParetoAxisTransform> tr;
            for (int a = 0; a < d; ++a) tr.emplace_back(model.exponent().alphas[static_cast<std::size_t>(a)]);
            auto g = axis_values(axes, [&](int a, double x) { return tr[static_cast<std::size_t>(a)].one_minus_P(x); });
            integral = tensor_sum(axes, [&](const std::array<std::size_t, kMaxDim>& idx) {
                cplx u[kMaxDim];
                cplx k(1.0, 0.0);
                for (int a = 0; a < d; ++a) {
                    u[a] = g.axis[static_cast<std::size_t>(a)][idx[a]];
                    k *= kern[static_cast<std::size_t>(a)][idx[a]];
                }
                return k.real() / std::norm(fold_one_minus_product(u, d));
            });
        } else {
            integral = tensor_sum(axes, [&](const std::array<std::size_t, kMaxDim>& idx) {
                double x[kMaxDim] = {};
                cplx k(1.0, 0.0);
                for (int a = 0; a < d; ++a) {
                    x[a] = axes[static_cast<std::size_t>(a)]->x[idx[a]];
                    k *= kern[static_cast<std::size_t>(a)][idx[a]];
                }
                return k.real() / std::norm(model.one_minus_P(std::span<const double>(x, static_cast<std::size_t>(d))));
            });
        }
        results[rule] = integral / std::pow(2.0 * kPi, d);
    }
    SpectralSum s;
    s.value = results[0];
    s.error = std::abs(results[0] - results[1]);
    if (s.error > cfg.rel_tol * std::max(std::abs(s.value), 1e-300)) {
        throw NumericalError("spectral quadrature did not converge: estimate " + std::to_string(s.value) + ", error " +
                             std::to_string(s.error));
    }
    return s;
}

cplx dirichlet(std::int64_t L, double x)
{
    // sum_{l=0}^{L-1} e^{ilx}
    if (L <= 0) return {0.0, 0.0};
    const double h = 0.5 * x;
    const double sh = std::sin(h);
    if (std::abs(sh) < 1e-300) return {static_cast<double>(L), 0.0};
    if (std::abs(x) * static_cast<double>(L) < 1e-6) return {static_cast<double>(L), 0.5 * x * static_cast<double>(L) * (L - 1)};
    return std::polar(std::sin(static_cast<double>(L) * h) / sh, static_cast<double>(L - 1) * h);
}

} // namespace

SpectralSum spectral_pair_sum(const SpectralModel& model, const LatticePoint& offset, const QuadratureConfig& cfg)
{
    const int d = model.dim();
    double mmax = 1.0;
    for (int a = 0; a < d; ++a) mmax = std::max(mmax, std::abs(static_cast<double>(offset[a])));
    auto cap = [&](double) { return std::min(cfg.max_width, 1.0 / mmax); };
    return exact_spectral_integral(model, cfg, cap, [&](int a, double x) {
        return std::polar(1.0, static_cast<double>(offset[static_cast<std::size_t>(a)]) * x);
    });
}

std::vector<std::int64_t> box_lengths(const std::vector<std::int64_t>& extents, const std::vector<double>& t)
{
    if (extents.size() != t.size()) throw DomainError("t has the wrong dimension");
    std::vector<std::int64_t> L(extents.size());
    for (std::size_t a = 0; a < t.size(); ++a) {
        if (!(t[a] >= 0.0 && t[a] <= 1.0)) throw DomainError("t must lie in [0,1]^d");
        L[a] = static_cast<std::int64_t>(std::ceil(static_cast<double>(extents[a]) * t[a]));
    }
    return L;
}

namespace {

// Inclusive d-dimensional prefix sums of the table, padded with a zero layer
// so that P[i] = sum_{k < i} q_k.
struct PrefixSums {
    int d = 1;
    std::int64_t side = 0; // extent + 2
    std::vector<double> v;

    double at(const LatticePoint& i) const
    {
        std::size_t idx = 0;
        for (int a = d - 1; a >= 0; --a) idx = idx * static_cast<std::size_t>(side) + static_cast<std::size_t>(i[a]);
        return v[idx];
    }

    // sum of q over [lo, hi] intersected with the table box.
    double box(LatticePoint lo, LatticePoint hi, std::int64_t extent) const
    {
        for (int a = 0; a < d; ++a) {
            lo[a] = std::max<std::int64_t>(lo[a], 0);
            hi[a] = std::min<std::int64_t>(hi[a], extent);
            if (hi[a] < lo[a]) return 0.0;
        }
        double s = 0.0;
        for (int mask = 0; mask < (1 << d); ++mask) {
            LatticePoint c{};
            int sign = 1;
            for (int a = 0; a < d; ++a) {
                if (mask & (1 << a)) {
                    c[a] = lo[a];
                    sign = -sign;
                } else {
                    c[a] = hi[a] + 1;
                }
            }
            s += sign * at(c);
        }
        return s;
    }
};

PrefixSums make_prefix(const QTable& t)
{
    PrefixSums P;
    P.d = t.dim;
    P.side = t.extent + 2;
    std::size_t cells = 1;
    for (int a = 0; a < t.dim; ++a) cells *= static_cast<std::size_t>(P.side);
    P.v.assign(cells, 0.0);
    LatticePoint zero{}, hi{};
    for (int a = 0; a < t.dim; ++a) hi[a] = t.extent;
    for_box(t.dim, zero, hi, [&](const LatticePoint& k) {
        LatticePoint s{};
        for (int a = 0; a < t.dim; ++a) s[a] = k[a] + 1;
        std::size_t idx = 0;
        for (int a = t.dim - 1; a >= 0; --a) idx = idx * static_cast<std::size_t>(P.side) + static_cast<std::size_t>(s[a]);
        P.v[idx] = t.values[t.index(k)];
    });
    std::size_t stride = 1;
    for (int a = 0; a < t.dim; ++a) {
        const std::size_t S = static_cast<std::size_t>(P.side);
        for (std::size_t i = 0; i < cells; ++i) {
            if ((i / stride) % S != 0) P.v[i] += P.v[i - stride];
        }
        stride *= S;
    }
    return P;
}

double b_value(const PrefixSums& P, const QTable& t, const std::vector<std::int64_t>& L, const LatticePoint& j)
{
    LatticePoint lo{}, hi{};
    for (int a = 0; a < t.dim; ++a) {
        if (L[static_cast<std::size_t>(a)] <= 0) return 0.0;
        lo[a] = -j[a];
        hi[a] = L[static_cast<std::size_t>(a)] - 1 - j[a];
    }
    return P.box(lo, hi, t.extent);
}

void check_lengths(const QTable& t, const std::vector<std::int64_t>& L)
{
    if (static_cast<int>(L.size()) != t.dim) throw DomainError("box lengths have the wrong dimension");
    for (auto l : L) {
        if (l < 0) throw DomainError("box lengths must be nonnegative");
    }
}

} // namespace

BCoefficients b_coefficients(const QTable& table, const std::vector<std::int64_t>& lengths)
{
    check_lengths(table, lengths);
    const int d = table.dim;
    const PrefixSums P = make_prefix(table);
    LatticePoint lo{}, hi{};
    for (int a = 0; a < d; ++a) {
        lo[a] = -table.extent;
        hi[a] = lengths[static_cast<std::size_t>(a)] - 1;
    }
    BCoefficients r;
    for_box(d, lo, hi, [&](const LatticePoint& j) {
        const double b = b_value(P, table, lengths, j);
        r.norm_sq += b * b;
        r.sup = std::max(r.sup, std::abs(b));
    });
    r.ratio = r.norm_sq > 0.0 ? r.sup / std::sqrt(r.norm_sq) : 0.0;
    return r;
}

double b_inner_product(const QTable& table, const std::vector<std::int64_t>& lt, const std::vector<std::int64_t>& ls)
{
    check_lengths(table, lt);
    check_lengths(table, ls);
    const int d = table.dim;
    const PrefixSums P = make_prefix(table);
    LatticePoint lo{}, hi{};
    for (int a = 0; a < d; ++a) {
        lo[a] = -table.extent;
        hi[a] = std::min(lt[static_cast<std::size_t>(a)], ls[static_cast<std::size_t>(a)]) - 1;
    }
    double acc = 0.0;
    for_box(d, lo, hi, [&](const LatticePoint& j) { acc += b_value(P, table, lt, j) * b_value(P, table, ls, j); });
    return acc;
}

double b_inner_product_spectral(const QTable& table, const std::vector<std::int64_t>& lt,
                                const std::vector<std::int64_t>& ls)
{
    check_lengths(table, lt);
    check_lengths(table, ls);
    const int d = table.dim;
    std::int64_t lmax = 0;
    for (int a = 0; a < d; ++a) lmax = std::max({lmax, lt[static_cast<std::size_t>(a)], ls[static_cast<std::size_t>(a)]});
    // |Q_N|^2 K_t conj(K_s) has frequencies below N + lmax in modulus.
    const std::int64_t M = 2 * (table.extent + lmax) + 1;
    const std::size_t Ms = static_cast<std::size_t>(M);
    const std::size_t S = static_cast<std::size_t>(table.side());
    double grid_cells = 1.0;
    for (int a = 0; a < d; ++a) grid_cells *= static_cast<double>(M);
    if (grid_cells > 2e8) throw ResourceError("spectral prelimit grid exceeds budget 2e8");

    // Separable DFT: transform axis by axis, growing each axis from S to M.
    std::vector<cplx> cur(table.values.begin(), table.values.end());
    std::vector<std::size_t> shape(static_cast<std::size_t>(d), S);
    std::vector<cplx> roots(Ms);
    for (std::size_t i = 0; i < Ms; ++i) roots[i] = std::polar(1.0, 2.0 * kPi * static_cast<double>(i) / static_cast<double>(M));
    for (int a = 0; a < d; ++a) {
        std::size_t before = 1, after = 1;
        for (int b = 0; b < a; ++b) before *= shape[static_cast<std::size_t>(b)];
        for (int b = a + 1; b < d; ++b) after *= shape[static_cast<std::size_t>(b)];
        std::vector<cplx> next(before * Ms * after);
        for (std::size_t o = 0; o < after; ++o) {
            for (std::size_t f = 0; f < Ms; ++f) {
                for (std::size_t i = 0; i < before; ++i) {
                    cplx acc(0.0, 0.0);
                    for (std::size_t k = 0; k < S; ++k) {
                        acc += cur[(o * S + k) * before + i] * roots[(k * f) % Ms];
                    }
                    next[(o * Ms + f) * before + i] = acc;
                }
            }
        }
        cur = std::move(next);
        shape[static_cast<std::size_t>(a)] = Ms;
    }
    std::vector<std::vector<cplx>> kern(static_cast<std::size_t>(d), std::vector<cplx>(Ms));
    for (int a = 0; a < d; ++a) {
        for (std::size_t f = 0; f < Ms; ++f) {
            const double x = 2.0 * kPi * static_cast<double>(f) / static_cast<double>(M);
            kern[static_cast<std::size_t>(a)][f] = dirichlet(lt[static_cast<std::size_t>(a)], x) *
                                                   std::conj(dirichlet(ls[static_cast<std::size_t>(a)], x));
        }
    }
    double acc = 0.0;
    for (std::size_t idx = 0; idx < cur.size(); ++idx) {
        std::size_t rem = idx;
        cplx k(1.0, 0.0);
        for (int a = 0; a < d; ++a) {
            k *= kern[static_cast<std::size_t>(a)][rem % Ms];
            rem /= Ms;
        }
        acc += std::norm(cur[idx]) * k.real();
    }
    return acc / grid_cells;
}

SpectralSum b_inner_product_exact(const SpectralModel& model, const std::vector<std::int64_t>& lt,
                                  const std::vector<std::int64_t>& ls, const QuadratureConfig& cfg)
{
    const int d = model.dim();
    if (static_cast<int>(lt.size()) != d || static_cast<int>(ls.size()) != d) throw DomainError("box lengths have the wrong dimension");
    double lmax = 1.0;
    for (int a = 0; a < d; ++a) {
        if (lt[static_cast<std::size_t>(a)] == 0 || ls[static_cast<std::size_t>(a)] == 0) return {};
        lmax = std::max({lmax, static_cast<double>(lt[static_cast<std::size_t>(a)]), static_cast<double>(ls[static_cast<std::size_t>(a)])});
    }
    auto cap = [&](double) { return std::min(cfg.max_width, 2.0 / lmax); };
    return exact_spectral_integral(model, cfg, cap, [&](int a, double x) {
        return dirichlet(lt[static_cast<std::size_t>(a)], x) * std::conj(dirichlet(ls[static_cast<std::size_t>(a)], x));
    });
}

PrelimitResult prelimit_cov(const QTable& table, double p, const std::vector<std::int64_t>& extents,
                            const std::vector<double>& t, const std::vector<double>& s, PrelimitPath path)
{
    const auto lt = box_lengths(extents, t);
    const auto ls = box_lengths(extents, s);
    const double sx2 = sigma_x2(table, p);
    PrelimitResult r;
    r.path = path;
    switch (path) {
    case PrelimitPath::Coefficients: r.value = sx2 * b_inner_product(table, lt, ls); break;
    case PrelimitPath::Spectral: r.value = sx2 * b_inner_product_spectral(table, lt, ls); break;
    case PrelimitPath::ExactSpectral: throw DomainError("use prelimit_cov_exact for the untruncated path");
    }
    return r;
}

PrelimitResult prelimit_cov_exact(const SpectralModel& model, double sum_sq, const std::vector<std::int64_t>& extents,
                                  const std::vector<double>& t, const std::vector<double>& s, const QuadratureConfig& cfg)
{
    const auto lt = box_lengths(extents, t);
    const auto ls = box_lengths(extents, s);
    const double sx2 = sigma_x2_from_sum_sq(sum_sq, model.p());
    const SpectralSum b = b_inner_product_exact(model, lt, ls, cfg);
    return {sx2 * b.value, sx2 * b.error, PrelimitPath::ExactSpectral};
}

} // namespace osgrf
