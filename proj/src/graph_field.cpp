#include "osgrf/graph_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "osgrf/errors.hpp"
#include "osgrf/parallel.hpp"
#include "osgrf/qtable.hpp"

namespace osgrf {

namespace {

constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

std::int8_t component_sign(std::uint64_t seed, const LatticePoint& root, double p)
{
    Stream s(derive_point(derive(seed, static_cast<std::uint64_t>(StreamDomain::Sign)), root));
    return s.uniform() <= p ? std::int8_t{1} : std::int8_t{-1};
}

struct Ids {
    std::uint32_t root = kUnset;
    std::uint32_t half = kUnset;
};

class IdRegistry {
public:
    std::uint32_t id(const LatticePoint& p)
    {
        auto [it, inserted] = index_.try_emplace(p, static_cast<std::uint32_t>(points_.size()));
        if (inserted) points_.push_back(p);
        return it->second;
    }
    const std::vector<LatticePoint>& points() const noexcept { return points_; }

private:
    std::unordered_map<LatticePoint, std::uint32_t, LatticePointHash> index_;
    std::vector<LatticePoint> points_;
};

} // namespace

std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica)
{
    return derive(seed, static_cast<std::uint64_t>(StreamDomain::Replica), replica);
}

LatticePoint ancestor(const SpectralModel& model, std::uint64_t seed, const LatticePoint& point)
{
    Stream s(derive_point(derive(seed, static_cast<std::uint64_t>(StreamDomain::Step)), point));
    const LatticePoint z = model.sample_step(s);
    LatticePoint a = point;
    for (int k = 0; k < model.dim(); ++k) a[k] -= z[k];
    return a;
}

std::size_t FieldWindow::index(const LatticePoint& k) const noexcept
{
    std::size_t idx = 0;
    for (int a = dim - 1; a >= 0; --a) idx = idx * static_cast<std::size_t>(extents[a]) + static_cast<std::size_t>(k[a]);
    return idx;
}

LatticePoint FieldWindow::point(std::size_t index) const noexcept
{
    LatticePoint k{};
    for (int a = 0; a < dim; ++a) {
        k[a] = static_cast<std::int64_t>(index % static_cast<std::size_t>(extents[a]));
        index /= static_cast<std::size_t>(extents[a]);
    }
    return k;
}

FieldWindow simulate_window(const SpectralModel& model, const std::vector<std::int64_t>& extents, std::uint64_t seed,
                            const WindowOptions& options)
{
    const int d = model.dim();
    if (static_cast<int>(extents.size()) != d) throw ConfigError("window extents must have one entry per axis");
    for (auto e : extents) {
        if (e < 1) throw ConfigError("window extents must be >= 1");
    }
    FieldWindow w;
    w.dim = d;
    w.extents = extents;
    w.seed = seed;
    w.buffer_depth = options.buffer_depth > 0 ? options.buffer_depth : *std::max_element(extents.begin(), extents.end());
    const std::int64_t D = w.buffer_depth;
    const std::int64_t half_D = D / 2;

    double cells = 1.0;
    for (auto e : extents) cells *= static_cast<double>(e);
    if (cells > static_cast<double>(options.site_budget)) {
        throw ResourceError("window of " + std::to_string(cells) + " sites exceeds the site budget of " +
                            std::to_string(options.site_budget));
    }
    const auto n_sites = static_cast<std::size_t>(cells);

    std::vector<Ids> window_ids(n_sites);
    std::unordered_map<LatticePoint, Ids, LatticePointHash> buffer;
    IdRegistry roots, half_roots;

    auto in_window = [&](const LatticePoint& c) {
        for (int a = 0; a < d; ++a) {
            if (c[a] < 0 || c[a] >= extents[a]) return false;
        }
        return true;
    };
    auto in_region = [&](const LatticePoint& c, std::int64_t depth) {
        for (int a = 0; a < d; ++a) {
            if (c[a] < -depth || c[a] >= extents[a]) return false;
        }
        return true;
    };
    auto lookup = [&](const LatticePoint& c) -> Ids* {
        if (in_window(c)) {
            Ids& ids = window_ids[w.index(c)];
            return ids.root == kUnset ? nullptr : &ids;
        }
        auto it = buffer.find(c);
        return it == buffer.end() ? nullptr : &it->second;
    };

    std::vector<LatticePoint> path;
    for (std::size_t site = 0; site < n_sites; ++site) {
        if (window_ids[site].root != kUnset) continue;
        path.clear();
        LatticePoint c = w.point(site);
        Ids tail;
        while (true) {
            path.push_back(c);
            const LatticePoint next = ancestor(model, seed, c);
            if (!in_region(next, D)) {
                tail.root = roots.id(next);
                tail.half = half_roots.id(next);
                break;
            }
            if (const Ids* known = lookup(next)) {
                tail = *known;
                break;
            }
            c = next;
        }
        // Assign ids backwards; points below -D/2 are their own half-depth roots.
        Ids cur = tail;
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            if (!in_region(*it, half_D)) cur.half = half_roots.id(*it);
            if (in_window(*it)) {
                window_ids[w.index(*it)] = cur;
            } else {
                buffer.emplace(*it, cur);
            }
        }
        if (n_sites + buffer.size() > options.site_budget) {
            throw ResourceError("graph traversal exceeded the site budget of " + std::to_string(options.site_budget) +
                                " tracked points");
        }
    }

    w.tracked_sites = n_sites + buffer.size();
    w.values.resize(n_sites);
    w.component_id.resize(n_sites);
    std::vector<std::uint32_t> dense(roots.points().size(), kUnset);
    std::vector<std::int8_t> sign_of;
    std::unordered_map<std::uint32_t, std::uint32_t> first_half; // component -> a half root
    std::vector<bool> split;
    std::unordered_set<std::uint32_t> halves_seen;
    for (std::size_t site = 0; site < n_sites; ++site) {
        const Ids ids = window_ids[site];
        std::uint32_t& cid = dense[ids.root];
        if (cid == kUnset) {
            cid = static_cast<std::uint32_t>(w.roots.size());
            w.roots.push_back(roots.points()[ids.root]);
            sign_of.push_back(component_sign(seed, w.roots.back(), model.p()));
            split.push_back(false);
            first_half.emplace(cid, ids.half);
        } else if (first_half[cid] != ids.half) {
            split[cid] = true;
        }
        halves_seen.insert(ids.half);
        w.component_id[site] = cid;
        w.values[site] = sign_of[cid];
    }
    w.total_components = w.roots.size();
    w.truncated_components = static_cast<std::size_t>(std::count(split.begin(), split.end(), true));
    w.components_at_half_depth = halves_seen.size();
    return w;
}

PartialSumGrid partial_sums(const FieldWindow& window, const std::vector<std::vector<double>>& t_grid, double p)
{
    const int d = window.dim;
    // d-dimensional inclusive prefix sums
    std::vector<double> pre(window.values.begin(), window.values.end());
    std::size_t stride = 1;
    for (int a = 0; a < d; ++a) {
        const auto n = static_cast<std::size_t>(window.extents[a]);
        for (std::size_t i = 0; i < pre.size(); ++i) {
            if ((i / stride) % n != 0) pre[i] += pre[i - stride];
        }
        stride *= n;
    }
    PartialSumGrid g;
    g.t_grid = t_grid;
    g.extents = window.extents;
    g.seed = window.seed;
    for (const auto& t : t_grid) {
        if (static_cast<int>(t.size()) != d) throw DomainError("t has the wrong dimension");
        LatticePoint k{};
        std::int64_t cells = 1;
        for (int a = 0; a < d; ++a) {
            if (!(t[a] > 0.0 && t[a] <= 1.0)) throw DomainError("t must lie in (0,1]^d");
            const auto L = static_cast<std::int64_t>(std::ceil(static_cast<double>(window.extents[a]) * t[a]));
            k[a] = L - 1;
            cells *= L;
        }
        const double s = pre[window.index(k)];
        g.sums.push_back(s);
        g.box_cells.push_back(cells);
        g.centered.push_back(s - (2.0 * p - 1.0) * static_cast<double>(cells));
    }
    return g;
}

namespace {

Estimate variance_estimate(const std::vector<double>& x)
{
    const auto n = static_cast<double>(x.size());
    Estimate e;
    e.replicas = x.size();
    if (x.size() < 2) return e;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double c = (v - mean) * (v - mean);
        m2 += c;
        m4 += c * c;
    }
    const double var = m2 / (n - 1.0);
    m2 /= n;
    m4 /= n;
    e.value = var;
    e.se = std::sqrt(std::max(0.0, (m4 - m2 * m2) / n));
    return e;
}

} // namespace

XStarEstimate estimate_var_xstar(const SpectralModel& model, std::size_t replicas, std::int64_t K, std::uint64_t seed,
                                 std::int64_t buffer_depth, unsigned workers, std::size_t site_budget)
{
    if (K < 1) throw ConfigError("K must be >= 1");
    const int d = model.dim();
    const std::vector<std::int64_t> extents(static_cast<std::size_t>(d), K + 1);
    // weights pmf(k) for k in [1,K]^d, laid out to match window offsets K*1 - k
    LatticePoint top{};
    for (int a = 0; a < d; ++a) top[a] = K;
    std::vector<std::pair<std::size_t, double>> weights;
    {
        FieldWindow shape;
        shape.dim = d;
        shape.extents = extents;
        const std::size_t cells = [&] {
            std::size_t c = 1;
            for (auto e : extents) c *= static_cast<std::size_t>(e);
            return c;
        }();
        if (cells > site_budget) throw ResourceError("X* window exceeds the site budget");
        for (std::size_t i = 0; i < cells; ++i) {
            const LatticePoint j = shape.point(i);
            LatticePoint k{};
            bool positive = true;
            for (int a = 0; a < d; ++a) {
                k[a] = K - j[a];
                positive = positive && k[a] >= 1;
            }
            if (!positive) continue;
            const double w = model.pmf(k);
            if (w > 0.0) weights.emplace_back(i, w);
        }
    }
    std::vector<double> xs(replicas);
    WindowOptions opt;
    opt.buffer_depth = buffer_depth;
    opt.site_budget = site_budget;
    parallel_for(replicas, workers, [&](std::size_t r) {
        const FieldWindow w = simulate_window(model, extents, replica_seed(seed, r), opt);
        double x = w.values[w.index(top)];
        for (const auto& [i, wt] : weights) x -= wt * w.values[i];
        xs[r] = x;
    });
    XStarEstimate e;
    static_cast<Estimate&>(e) = variance_estimate(xs);
    e.K = K;
    const double tail = model.tail_mass_outside_box(K);
    e.truncation_bound = 4.0 * tail * tail; // variance of the dropped part of the conditional mean
    return e;
}

MeetingEstimate estimate_meeting_prob(const SpectralModel& model, const LatticePoint& offset, std::size_t replicas,
                                      std::int64_t depth, std::uint64_t seed, unsigned workers, std::size_t site_budget)
{
    if (depth < 1) throw ConfigError("depth must be >= 1");
    const int d = model.dim();
    auto inside = [&](const LatticePoint& c) {
        for (int a = 0; a < d; ++a) {
            if (c[a] < -depth) return false;
        }
        return true;
    };
    auto level = [&](const LatticePoint& c) {
        std::int64_t v = 0;
        for (int a = 0; a < d; ++a) v += c[a];
        return v;
    };
    // Steps are positive in every coordinate, so the coordinate sum strictly
    // drops along a line. Advancing the higher of the two lines can never step
    // past a common site, which makes the walk memory-free.
    std::vector<std::uint8_t> met(replicas, 0);
    parallel_for(replicas, workers, [&](std::size_t r) {
        const std::uint64_t rs = replica_seed(seed, r);
        LatticePoint a{}, b = offset;
        std::size_t steps = 0;
        while (inside(a) && inside(b)) {
            if (a == b) {
                met[r] = 1;
                return;
            }
            if (++steps > 2 * site_budget) throw ResourceError("ancestral lines exceeded the site budget");
            if (level(a) >= level(b)) a = ancestor(model, rs, a);
            else b = ancestor(model, rs, b);
        }
    });
    MeetingEstimate e;
    e.replicas = replicas;
    e.depth = depth;
    double hits = 0.0;
    for (auto m : met) hits += m;
    const double n = static_cast<double>(replicas);
    e.value = replicas ? hits / n : 0.0;
    e.se = replicas ? std::sqrt(e.value * (1.0 - e.value) / n) : 0.0;
    e.caveat = "meetings below depth " + std::to_string(depth) + " are not observed; the estimate is biased low";
    return e;
}

} // namespace osgrf
