#pragma once

#include "degsde/coefficients.hpp"
#include "degsde/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace degsde {

struct SimConfig {
    double step = 1e-3;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::size_t path_count = 1;
    double explosion_threshold = 1e6;
    double degeneracy_thickness = 0.0;
    /// Gaussian draws are made at step / 2^refinement_depth and summed pairwise
    /// up to `step`, so paths simulated at different depths from the same finest
    /// step share one Brownian path.
    int refinement_depth = 0;

    /// Number of Euler steps; T/h rounded to the nearest integer when within
    /// 1e-9 of one, rounded up otherwise.
    std::size_t step_count() const;
    void validate() const;
};

/// Brownian increments keyed by (seed, path index, step index, coordinate).
///
/// Every finest-level increment is sqrt(h_fine) Z rounded to the dyadic lattice
/// 2^-40, so sums of increments are exact in double precision: an increment at
/// step h is bit-identical to the sum of its two h/2 halves, and a Brownian
/// path is the same no matter how its increments are grouped.
class BrownianIncrements {
public:
    static constexpr int kLatticeBits = 40;

    BrownianIncrements(std::uint64_t seed, int dim, double step, int refinement_depth = 0);

    int dim() const noexcept { return dim_; }
    double step() const noexcept { return step_; }

    /// Increment over [k h, (k+1) h] for the given path; writes dim values.
    void fill(std::uint64_t path_index, std::uint64_t step_index, double* out) const;
    Vector increment(std::uint64_t path_index, std::uint64_t step_index) const;

private:
    NormalStream normals_;
    int dim_;
    double step_;
    int depth_;
    double fine_scale_;
};

enum class PathStatus { completed, exploded };

/// One Euler-Maruyama trajectory. States and increments are stored flat,
/// `dim` values per step.
struct PathSample {
    int dim = 0;
    double step = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    std::vector<double> states;
    std::vector<double> increments;
    PathStatus status = PathStatus::completed;
    /// Index of the state at which explosion was declared.
    std::optional<std::size_t> explosion_step;
    std::string diagnostic;

    std::size_t state_count() const noexcept { return dim ? states.size() / dim : 0; }
    std::size_t increment_count() const noexcept { return dim ? increments.size() / dim : 0; }
    Eigen::Map<const Vector> state(std::size_t k) const { return {states.data() + k * dim, dim}; }
    Eigen::Map<const Vector> increment(std::size_t k) const { return {increments.data() + k * dim, dim}; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * step; }
    bool exploded() const noexcept { return status == PathStatus::exploded; }
};

/// X_{k+1} = X_k + sqrt(1/psi)(X_k) sigma(X_k) dW_k + G(X_k) h, stopped with
/// status exploded once |X_k| exceeds the explosion threshold or turns non-finite.
PathSample em_path(const CoefficientSet& coeffs, const Vector& start, const SimConfig& cfg,
                   std::uint64_t path_index);

struct CoupledPair {
    PathSample first;
    PathSample second;
    /// Z_k = X^1_k - X^2_k for k below both legs' state counts.
    std::vector<double> distance;

    std::size_t distance_count() const noexcept { return first.dim ? distance.size() / first.dim : 0; }
    Eigen::Map<const Vector> difference(std::size_t k) const {
        return {distance.data() + k * first.dim, first.dim};
    }
    /// min of the two legs' exit steps from B_{n-1}.
    std::optional<std::size_t> joint_exit_step(int n) const;
};

/// Both legs driven by the same increment sequence.
CoupledPair em_coupled_pair(const CoefficientSet& coeffs, const Vector& start1, const Vector& start2,
                            const SimConfig& cfg, std::uint64_t path_index);

/// Smallest k with |X_k| >= n - 1.
std::optional<std::size_t> first_exit_step(const PathSample& path, int n);

/// h * #{k : dispersion_scale(X_k) <= eps}, counted over left endpoints.
double occupation_time(const PathSample& path, const CoefficientSet& coeffs, double eps);

/// Little-endian header d, h, T, seed, path_index (64-bit words) followed by
/// the states as float64.
void write_trajectory_binary(const PathSample& path, std::ostream& out);
PathSample read_trajectory_binary(std::istream& in);
/// step,time,x0,...,x{d-1}
void write_trajectory_csv(const PathSample& path, std::ostream& out);

}  // namespace degsde
