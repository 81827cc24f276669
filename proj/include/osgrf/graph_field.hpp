#pragma once

// Random ancestor graph on a lattice window and the +-1 field it carries.
//
// Each lattice point j has one outgoing edge j -> j - Z_j with Z_j ~ mu drawn
// from a stream keyed by (seed, j). Following edges from a window site gives
// its ancestral chain; chains are followed until they reach an already
// resolved point or leave the tracked region [-D, n_k - 1]. The first point
// outside the region is the chain's terminal and serves as component root,
// so the sign of a component depends only on (seed, root).

#include <cstdint>
#include <string>
#include <vector>

#include "osgrf/lattice.hpp"
#include "osgrf/spectral_model.hpp"

namespace osgrf {

inline constexpr std::size_t kDefaultSiteBudget = 100'000'000;

struct FieldWindow {
    int dim = 1;
    std::vector<std::int64_t> extents;
    std::int64_t buffer_depth = 1;
    std::uint64_t seed = 0;
    std::vector<std::int8_t> values;           // colex order, axis 0 fastest
    std::vector<std::uint32_t> component_id;   // dense ids in order of first appearance
    std::vector<LatticePoint> roots;           // terminal point per component id
    // Every chain ends by leaving the tracked region, so all components are
    // cut at the depth floor. A component counts as truncated when it relies on
    // a merge below -D/2, i.e. it would split if the depth were halved. The
    // fraction of such components shrinks as D grows.
    std::size_t total_components = 0;
    std::size_t truncated_components = 0;
    std::size_t components_at_half_depth = 0;
    std::size_t tracked_sites = 0;

    std::size_t size() const noexcept { return values.size(); }
    std::size_t index(const LatticePoint& k) const noexcept;
    LatticePoint point(std::size_t index) const noexcept;
};

struct WindowOptions {
    std::int64_t buffer_depth = 0; // 0 selects the largest extent
    std::size_t site_budget = kDefaultSiteBudget;
};

FieldWindow simulate_window(const SpectralModel& model, const std::vector<std::int64_t>& extents,
                            std::uint64_t seed, const WindowOptions& options = {});

// Ancestor of `point` in the graph keyed by `seed`.
LatticePoint ancestor(const SpectralModel& model, std::uint64_t seed, const LatticePoint& point);

struct PartialSumGrid {
    std::vector<std::vector<double>> t_grid;
    std::vector<double> sums;
    std::vector<double> centered;
    std::vector<std::int64_t> box_cells; // prod ceil(n_k t_k)
    std::vector<std::int64_t> extents;
    std::uint64_t seed = 0;
};

PartialSumGrid partial_sums(const FieldWindow& window, const std::vector<std::vector<double>>& t_grid, double p);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t replicas = 0;
};

struct XStarEstimate : Estimate {
    std::int64_t K = 0;
    double truncation_bound = 0.0; // 4 mu(N*^d \ [1,K]^d)^2
};

XStarEstimate estimate_var_xstar(const SpectralModel& model, std::size_t replicas, std::int64_t K, std::uint64_t seed,
                                 std::int64_t buffer_depth = 0, unsigned workers = 1,
                                 std::size_t site_budget = kDefaultSiteBudget);

struct MeetingEstimate : Estimate {
    std::int64_t depth = 0;
    std::string caveat;
};

MeetingEstimate estimate_meeting_prob(const SpectralModel& model, const LatticePoint& offset, std::size_t replicas,
                                      std::int64_t depth, std::uint64_t seed, unsigned workers = 1,
                                      std::size_t site_budget = kDefaultSiteBudget);

// Per-replica graph seed used by the estimators.
std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica);

} // namespace osgrf
