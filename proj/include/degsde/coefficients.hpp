#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace degsde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a coefficient evaluation produces a non-finite or inconsistent value.
class CoefficientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Metadata describing where a coefficient set came from. Regularity claims
/// (local Sobolev membership of the dispersion and drift) are only made for
/// built-in families, whose singular exponent is known analytically.
struct FamilyInfo {
    std::string name;
    /// Exponent of the power-type singularity of 1/psi; nullopt for user input.
    std::optional<double> singular_exponent;
    bool smooth_drift = false;
    bool builtin = false;
};

/// The coefficient tuple of one SDE instance
///   dX = sqrt(1/psi)(X) sigma(X) dW + G(X) dt
/// together with the degeneracy set {sqrt(1/psi) = 0} and the region E where
/// psi is locally bounded away from 0 and infinity.
///
/// Immutable after construction; every member function is a pure function of
/// its argument and may be called concurrently.
class CoefficientSet {
public:
    struct Functions {
        std::function<double(const Vector&)> dispersion_scale;
        std::function<Matrix(const Vector&)> sigma;
        std::function<Vector(const Vector&)> drift;
        std::function<bool(const Vector&)> start_region;
        /// Optional; derived as sigma sigma^T when empty.
        std::function<Matrix(const Vector&)> diffusion_matrix;
    };

    CoefficientSet(int dim, FamilyInfo info, Functions fns);

    int dim() const noexcept { return dim_; }
    const FamilyInfo& info() const noexcept { return info_; }

    /// The map sqrt(1/psi); nonnegative.
    double dispersion_scale(const Vector& x) const;
    Matrix sigma(const Vector& x) const;
    /// A = sigma sigma^T.
    Matrix diffusion_matrix(const Vector& x) const;
    Vector drift(const Vector& x) const;
    bool degeneracy_indicator(const Vector& x) const { return dispersion_scale(x) == 0.0; }
    bool in_start_region(const Vector& x) const;

private:
    int dim_;
    FamilyInfo info_;
    Functions fns_;
};

/// Drift field G. Built-in kinds are smooth, hence locally in every H^{1,p}.
struct DriftSpec {
    enum class Kind { zero, constant, linear, cubic, user };

    Kind kind = Kind::zero;
    Vector value;        // constant
    double rate = 0.0;   // linear: G(x) = rate * x; cubic: G(x) = rate * |x|^2 x
    std::function<Vector(const Vector&)> user;

    static DriftSpec zero() { return {}; }
    static DriftSpec constant(Vector v);
    static DriftSpec linear(double rate);
    static DriftSpec cubic(double rate = 1.0);
    static DriftSpec custom(std::function<Vector(const Vector&)> fn);

    std::function<Vector(const Vector&)> build(int dim) const;
    bool smooth() const noexcept { return kind != Kind::user; }
};

/// sqrt(1/psi)(x) = |x|^{alpha/2} for x != 0 and gamma at the origin; sigma = A = id.
struct PowerLawFamily {
    int dim = 3;
    double alpha = 0.0;
    double origin_value = 0.0;
    DriftSpec drift;

    CoefficientSet build() const;
};

/// Truncated lattice of bumps centred at 2i e_1, i = 0..lattice_count-1, each
/// carrying |x - 2i e_1|^{alpha/2} inside the unit ball and 1 outside all balls.
struct BumpLatticeFamily {
    enum class Variant { zeros_at_centers, positive_at_centers };

    int dim = 3;
    double alpha = 0.0;
    std::size_t lattice_count = 1;
    Variant variant = Variant::zeros_at_centers;
    std::vector<double> center_weights;  // gamma_i, positive_at_centers only
    DriftSpec drift;

    CoefficientSet build() const;
    Vector center(std::size_t i) const;
};

/// Constant dispersion scale with sigma = id. scale = 0 gives the fully
/// degenerate control; scale = 1 is Brownian motion with drift.
struct ConstantDispersionFamily {
    int dim = 3;
    double scale = 1.0;
    DriftSpec drift;

    CoefficientSet build() const;
};

/// Strict upper bound d/(2d+2) on the admissible power-law exponent.
double admissible_alpha_bound(int dim);

struct ExponentChoice {
    double q = 0.0;        // integrability exponent of psi, q > 2d+2
    double q_tilde = 0.0;  // Sobolev exponent of the coefficients, q_tilde > d/2
    /// alpha = 0: constant dispersion, the gradient constraint on q_tilde is vacuous.
    bool nondegenerate_limit = false;
};

/// Midpoints of (2d+2, d/alpha) and (d/2, min(d/(2-alpha), d/2+eps)).
ExponentChoice select_exponents(int dim, double alpha, double eps);

/// Radii log-spaced in (n0, r_max], directions from a Halton set on the sphere.
struct RadialSamplingPlan {
    double r_max = 1e3;
    std::size_t radius_count = 48;
    std::size_t direction_count = 128;
    /// Any sampled ratio above the cap is a violation.
    double ratio_cap = 10.0;
    /// Ratio of outermost-shell to mid-shell maximum that signals unbounded growth.
    double growth_factor = 2.0;
};

struct H2Report {
    bool feasible = false;
    bool non_finite = false;
    double m_star = 0.0;           // max sampled LHS / (|x|^2 (ln|x| + 1))
    Vector witness;                // sample with the largest ratio
    double witness_ratio = 0.0;
    std::size_t samples = 0;
    std::string diagnostic;
};

/// Finite-sample check of the radial growth condition
///   -<(1/psi)A x, x>/|x|^2 + tr((1/psi)A)/2 + <G, x> <= M |x|^2 (ln|x| + 1)
/// for |x| > n0.
H2Report check_h2(const CoefficientSet& coeffs, int n0, const RadialSamplingPlan& plan = {});

struct Ball {
    Vector center;
    double radius = 0.0;
};

struct H3Report {
    bool ok = false;
    double inf_psi = 0.0;
    double sup_psi = 0.0;
    std::optional<Vector> witness;
    std::size_t samples = 0;
    std::string diagnostic;
};

/// Sampled inf/sup of psi = dispersion_scale^{-2} over the closed ball.
/// per_axis = 0 picks the largest odd count with per_axis^d <= 2e5; odd counts
/// put the centre and the axis extremes of the ball on the grid.
H3Report check_h3_window(const CoefficientSet& coeffs, const Ball& ball, std::size_t per_axis = 0);

struct CoefficientRecord {
    double dispersion_scale = 0.0;
    Matrix sigma;
    Matrix diffusion_matrix;
    Vector drift;
    bool degenerate = false;
};

/// Evaluates every coefficient at x; throws CoefficientError naming the
/// offending component on non-finite output or A != sigma sigma^T.
CoefficientRecord eval_all(const CoefficientSet& coeffs, const Vector& x);

}  // namespace degsde
