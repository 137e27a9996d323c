#pragma once

#include "degsde/grid_field.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace degsde {

/// Log-spaced radii from two grid cells up to max_radius (default: half the
/// smallest box extent).
std::vector<double> default_radius_menu(const GridField& f, std::size_t count = 24,
                                        std::optional<double> max_radius = std::nullopt);

/// Discrete Hardy-Littlewood maximal function
///   Mf(x) = max(|f(x)|, max_{r in radii} mean_{|y - x| <= r} |f(y)|),
/// the node value standing in for the r -> 0 limit of a continuous field.
/// Nodes whose largest ball leaves the box, or touches an invalid input node,
/// are marked invalid.
GridField maximal_function(const GridField& f, std::span<const double> radii);

/// |grad f| by central differences, one-sided on the boundary.
GridField gradient_norm(const GridField& f);

struct NodePair {
    std::size_t first = 0;
    std::size_t second = 0;
};

/// Uniformly drawn pairs of distinct nodes that are valid in `support`.
std::vector<NodePair> sample_node_pairs(const GridField& support, std::size_t count, std::uint64_t seed);

struct PairCheckReport {
    std::size_t evaluated = 0;
    std::size_t satisfied = 0;
    std::size_t skipped = 0;       // a node outside the valid region of M|grad f|
    double fraction = 0.0;         // satisfied / evaluated
    double constant = 0.0;
    /// Smallest constant for which every evaluated pair satisfies the bound.
    double empirical_constant = 0.0;
    std::optional<NodePair> worst;
};

/// Checks |f(x) - f(y)| <= constant |x - y| (M|grad f|(x) + M|grad f|(y)) on each pair.
PairCheckReport check_pointwise_maximal_bound(const GridField& f, std::span<const NodePair> pairs, double constant,
                                              std::span<const double> radii);

/// Riemann-sum L^p norm over the valid nodes.
double lp_norm(const GridField& f, double p);

/// Standard bump exp(-1/(1 - (m|x|)^2)) on B_{1/m}, sampled on the grid
/// spacing and normalised to unit discrete mass.
class Mollifier {
public:
    Mollifier(const GridField& grid, int m);

    int index() const noexcept { return m_; }
    double support_radius() const noexcept { return 1.0 / m_; }
    /// Unnormalised radial profile.
    static double profile(double scaled_radius);

    struct Tap {
        std::vector<long> offset;  // per-axis node offset
        double weight;             // normalised density value
    };
    const std::vector<Tap>& taps() const noexcept { return taps_; }
    double discrete_mass() const;

private:
    int m_;
    double cell_volume_;
    std::vector<Tap> taps_;
};

/// Discrete convolution with the normalised mollifier; valid only where the
/// 1/m-neighbourhood lies inside the box.
GridField mollify(const GridField& f, int m);

/// Smooth radial cutoff: 1 on B_n, 0 outside B_{n+1}, 1 - smootherstep(|x| - n) between.
double cutoff_profile(double radius, int n);

/// chi_n f; requires the box to contain B_{n+1}.
GridField cutoff_extend(const GridField& f, int n);

/// a - b on nodes valid in both.
GridField subtract(const GridField& a, const GridField& b);

}  // namespace degsde
