#include "degsde/coefficients.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace degsde {

namespace {

void require_dim(int dim) {
    if (dim < 3) {
        std::ostringstream msg;
        msg << "dimension must be at least 3 (got " << dim << ")";
        throw std::invalid_argument(msg.str());
    }
}

void require_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        std::ostringstream msg;
        msg << "alpha must lie in [0, 1) (got " << alpha << ")";
        throw std::invalid_argument(msg.str());
    }
}

std::string format_point(const Vector& x) {
    std::ostringstream out;
    out.precision(17);
    out << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i) out << ", ";
        out << x[i];
    }
    out << ')';
    return out.str();
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

// Quasi-uniform directions: the signed coordinate axes followed by Halton
// points pushed through the Gaussian quantile and normalised.
std::vector<Vector> sphere_directions(int dim, std::size_t count) {
    static constexpr std::array<std::uint64_t, 16> primes{2, 3, 5, 7, 11, 13, 17, 19,
                                                          23, 29, 31, 37, 41, 43, 47, 53};
    if (static_cast<std::size_t>(dim) > primes.size())
        throw std::invalid_argument("direction sampling supports dimension <= 16");
    std::vector<Vector> dirs;
    dirs.reserve(count + 2 * dim);
    for (int a = 0; a < dim; ++a) {
        dirs.push_back(Vector::Unit(dim, a));
        dirs.push_back(-Vector::Unit(dim, a));
    }
    for (std::size_t i = 1; dirs.size() < count + 2 * static_cast<std::size_t>(dim); ++i) {
        Vector z(dim);
        for (int a = 0; a < dim; ++a) {
            double u = radical_inverse(i, primes[a]);
            z[a] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
        }
        double n = z.norm();
        if (n > 0.0 && std::isfinite(n)) dirs.push_back(z / n);
    }
    return dirs;
}

}  // namespace

CoefficientSet::CoefficientSet(int dim, FamilyInfo info, Functions fns)
    : dim_(dim), info_(std::move(info)), fns_(std::move(fns)) {
    require_dim(dim);
    if (!fns_.dispersion_scale || !fns_.sigma || !fns_.drift)
        throw std::invalid_argument("coefficient set requires dispersion_scale, sigma and drift");
    if (!fns_.start_region)
        fns_.start_region = [f = fns_.dispersion_scale](const Vector& x) { return f(x) > 0.0; };
}

double CoefficientSet::dispersion_scale(const Vector& x) const { return fns_.dispersion_scale(x); }

Matrix CoefficientSet::sigma(const Vector& x) const { return fns_.sigma(x); }

Matrix CoefficientSet::diffusion_matrix(const Vector& x) const {
    if (fns_.diffusion_matrix) return fns_.diffusion_matrix(x);
    Matrix s = fns_.sigma(x);
    return s * s.transpose();
}

Vector CoefficientSet::drift(const Vector& x) const { return fns_.drift(x); }

bool CoefficientSet::in_start_region(const Vector& x) const { return fns_.start_region(x); }

DriftSpec DriftSpec::constant(Vector v) {
    DriftSpec d;
    d.kind = Kind::constant;
    d.value = std::move(v);
    return d;
}

DriftSpec DriftSpec::linear(double rate) {
    DriftSpec d;
    d.kind = Kind::linear;
    d.rate = rate;
    return d;
}

DriftSpec DriftSpec::cubic(double rate) {
    DriftSpec d;
    d.kind = Kind::cubic;
    d.rate = rate;
    return d;
}

DriftSpec DriftSpec::custom(std::function<Vector(const Vector&)> fn) {
    DriftSpec d;
    d.kind = Kind::user;
    d.user = std::move(fn);
    return d;
}

std::function<Vector(const Vector&)> DriftSpec::build(int dim) const {
    switch (kind) {
    case Kind::zero:
        return [dim](const Vector&) { return Vector::Zero(dim); };
    case Kind::constant:
        if (value.size() != dim) throw std::invalid_argument("constant drift has wrong dimension");
        return [v = value](const Vector&) { return v; };
    case Kind::linear:
        return [r = rate](const Vector& x) -> Vector { return r * x; };
    case Kind::cubic:
        return [r = rate](const Vector& x) -> Vector { return (r * x.squaredNorm()) * x; };
    case Kind::user:
        if (!user) throw std::invalid_argument("user drift without a function");
        return user;
    }
    throw std::logic_error("unreachable drift kind");
}

CoefficientSet PowerLawFamily::build() const {
    require_dim(dim);
    require_alpha(alpha);
    if (!(origin_value >= 0.0) || !std::isfinite(origin_value))
        throw std::invalid_argument("origin_value must be finite and >= 0");

    const double half_alpha = 0.5 * alpha;
    const double gamma = origin_value;
    const int d = dim;
    // psi is locally bounded above and below away from the origin; with
    // alpha = 0 and gamma > 0 it is bounded everywhere.
    const bool whole_space = alpha == 0.0 && gamma > 0.0;

    CoefficientSet::Functions fns;
    fns.dispersion_scale = [half_alpha, gamma](const Vector& x) {
        double r = x.norm();
        return r == 0.0 ? gamma : std::pow(r, half_alpha);
    };
    fns.sigma = [d](const Vector&) { return Matrix::Identity(d, d); };
    fns.diffusion_matrix = fns.sigma;
    fns.drift = drift.build(dim);
    fns.start_region = [whole_space](const Vector& x) { return whole_space || x.norm() > 0.0; };

    FamilyInfo info{"powerlaw", alpha, drift.smooth(), true};
    return CoefficientSet(dim, std::move(info), std::move(fns));
}

Vector BumpLatticeFamily::center(std::size_t i) const {
    return 2.0 * static_cast<double>(i) * Vector::Unit(dim, 0);
}

CoefficientSet BumpLatticeFamily::build() const {
    require_dim(dim);
    require_alpha(alpha);
    if (lattice_count == 0) throw std::invalid_argument("lattice_count must be positive");
    std::vector<double> weights;
    if (variant == Variant::positive_at_centers) {
        weights = center_weights;
        if (weights.empty()) weights.assign(lattice_count, 1.0);
        if (weights.size() != lattice_count)
            throw std::invalid_argument("center_weights must have lattice_count entries");
        for (double w : weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw std::invalid_argument("center_weights must be finite and positive");
    }

    const double half_alpha = 0.5 * alpha;
    const auto count = lattice_count;
    const int d = dim;
    // Balls B_1(2i e_1) are disjoint, so at most one bump is active at x.
    auto nearest = [count](const Vector& x) -> std::optional<std::size_t> {
        double c = std::round(x[0] / 2.0);
        if (c < 0.0 || c >= static_cast<double>(count)) return std::nullopt;
        return static_cast<std::size_t>(c);
    };

    CoefficientSet::Functions fns;
    fns.dispersion_scale = [=](const Vector& x) {
        auto i = nearest(x);
        if (!i) return 1.0;
        Vector offset = x;
        offset[0] -= 2.0 * static_cast<double>(*i);
        double r = offset.norm();
        if (r >= 1.0) return 1.0;
        if (r == 0.0) return weights.empty() ? 0.0 : weights[*i];
        return std::pow(r, half_alpha);
    };
    fns.sigma = [d](const Vector&) { return Matrix::Identity(d, d); };
    fns.diffusion_matrix = fns.sigma;
    fns.drift = drift.build(dim);
    const bool bounded = alpha == 0.0 && variant == Variant::positive_at_centers;
    fns.start_region = [=](const Vector& x) {
        if (bounded) return true;
        auto i = nearest(x);
        if (!i) return true;
        Vector offset = x;
        offset[0] -= 2.0 * static_cast<double>(*i);
        return offset.norm() > 0.0;
    };

    FamilyInfo info{variant == Variant::zeros_at_centers ? "bump_lattice_zeros" : "bump_lattice_weighted",
                    alpha, drift.smooth(), true};
    return CoefficientSet(dim, std::move(info), std::move(fns));
}

CoefficientSet ConstantDispersionFamily::build() const {
    require_dim(dim);
    if (!(scale >= 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("scale must be finite and >= 0");
    const int d = dim;
    const double s = scale;
    CoefficientSet::Functions fns;
    fns.dispersion_scale = [s](const Vector&) { return s; };
    fns.sigma = [d](const Vector&) { return Matrix::Identity(d, d); };
    fns.diffusion_matrix = fns.sigma;
    fns.drift = drift.build(dim);
    fns.start_region = [s](const Vector&) { return s > 0.0; };
    FamilyInfo info{"constant", 0.0, drift.smooth(), true};
    return CoefficientSet(dim, std::move(info), std::move(fns));
}

double admissible_alpha_bound(int dim) {
    require_dim(dim);
    return static_cast<double>(dim) / (2.0 * dim + 2.0);
}

ExponentChoice select_exponents(int dim, double alpha, double eps) {
    const double bound = admissible_alpha_bound(dim);
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        std::ostringstream msg;
        msg << "eps must be positive (got " << eps << ")";
        throw std::invalid_argument(msg.str());
    }
    if (!(alpha >= 0.0 && alpha < bound)) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "alpha = " << alpha << " is not admissible in dimension " << dim
            << ": require 0 <= alpha < d/(2d+2) = " << bound;
        throw std::invalid_argument(msg.str());
    }
    const double d = dim;
    ExponentChoice out;
    if (alpha == 0.0) {
        out.q = 2.0 * d + 3.0;
        out.q_tilde = d / 2.0 + eps / 2.0;
        out.nondegenerate_limit = true;
        return out;
    }
    out.q = 0.5 * ((2.0 * d + 2.0) + d / alpha);
    const double upper = std::min(d / (2.0 - alpha), d / 2.0 + eps);
    out.q_tilde = 0.5 * (d / 2.0 + upper);
    return out;
}

H2Report check_h2(const CoefficientSet& coeffs, int n0, const RadialSamplingPlan& plan) {
    if (n0 < 1)
        throw std::invalid_argument("check_h2 requires n0 >= 1: ln|x| + 1 is not positive inside the unit ball");
    if (!(plan.r_max > n0)) throw std::invalid_argument("check_h2 requires r_max > n0");
    if (plan.radius_count < 2 || plan.direction_count == 0)
        throw std::invalid_argument("check_h2 requires at least two radii and one direction");

    const int d = coeffs.dim();
    const auto dirs = sphere_directions(d, plan.direction_count);
    const double lo = n0;
    const double log_span = std::log(plan.r_max / lo);

    H2Report report;
    report.m_star = -std::numeric_limits<double>::infinity();
    report.witness = Vector::Zero(d);
    std::vector<double> shell_max(plan.radius_count, -std::numeric_limits<double>::infinity());

    for (std::size_t j = 0; j < plan.radius_count; ++j) {
        const double frac = static_cast<double>(j + 1) / static_cast<double>(plan.radius_count);
        const double r = j + 1 == plan.radius_count ? plan.r_max : lo * std::exp(log_span * frac);
        const double denom = r * r * (std::log(r) + 1.0);
        for (const Vector& u : dirs) {
            const Vector x = r * u;
            const double s = coeffs.dispersion_scale(x);
            const Matrix a = coeffs.diffusion_matrix(x);
            const Vector g = coeffs.drift(x);
            const double inv_psi = s * s;
            const double lhs = -inv_psi * x.dot(a * x) / (r * r) + 0.5 * inv_psi * a.trace() + g.dot(x);
            const double ratio = lhs / denom;
            ++report.samples;
            if (!std::isfinite(ratio)) {
                report.non_finite = true;
                report.feasible = false;
                report.witness = x;
                report.witness_ratio = ratio;
                report.diagnostic = "non-finite coefficient evaluation at " + format_point(x);
                return report;
            }
            shell_max[j] = std::max(shell_max[j], ratio);
            if (ratio > report.m_star) {
                report.m_star = ratio;
                report.witness = x;
                report.witness_ratio = ratio;
            }
        }
    }

    const double outer = shell_max.back();
    const double mid = shell_max[plan.radius_count / 2];
    std::ostringstream diag;
    if (report.m_star > plan.ratio_cap) {
        diag << "ratio " << report.m_star << " exceeds cap " << plan.ratio_cap << " at " << format_point(report.witness);
        report.feasible = false;
    } else if (outer > 0.0 && outer > plan.growth_factor * std::max(mid, 0.0)) {
        diag << "ratio grows with radius (outer shell " << outer << " vs mid shell " << mid << "), witness "
             << format_point(report.witness);
        report.feasible = false;
    } else {
        diag << "feasible with M* = " << report.m_star;
        report.feasible = true;
    }
    report.diagnostic = diag.str();
    return report;
}

H3Report check_h3_window(const CoefficientSet& coeffs, const Ball& ball, std::size_t per_axis) {
    const int d = coeffs.dim();
    if (ball.center.size() != d) throw std::invalid_argument("ball centre has wrong dimension");
    if (!(ball.radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    if (per_axis == 0) {
        per_axis = 3;
        while (std::pow(static_cast<double>(per_axis + 2), d) <= 2e5) per_axis += 2;
    }
    if (per_axis < 2) throw std::invalid_argument("per_axis must be at least 2");

    H3Report report;
    report.inf_psi = std::numeric_limits<double>::infinity();
    report.sup_psi = 0.0;

    std::vector<std::size_t> idx(d, 0);
    const double denom = static_cast<double>(per_axis - 1);
    Vector x(d);
    while (true) {
        for (int a = 0; a < d; ++a)
            x[a] = ball.center[a] + ball.radius * (2.0 * static_cast<double>(idx[a]) / denom - 1.0);
        if ((x - ball.center).norm() <= ball.radius * (1.0 + 1e-12)) {
            ++report.samples;
            if (!coeffs.in_start_region(x)) {
                report.ok = false;
                report.witness = x;
                report.diagnostic = "sample outside the start region at " + format_point(x);
                return report;
            }
            const double s = coeffs.dispersion_scale(x);
            if (s == 0.0) {
                report.ok = false;
                report.witness = x;
                report.diagnostic = "degenerate sample (psi undefined) at " + format_point(x);
                return report;
            }
            const double psi = 1.0 / (s * s);
            if (!std::isfinite(psi) || !(psi > 0.0)) {
                report.ok = false;
                report.witness = x;
                report.diagnostic = "non-finite psi at " + format_point(x);
                return report;
            }
            report.inf_psi = std::min(report.inf_psi, psi);
            report.sup_psi = std::max(report.sup_psi, psi);
        }
        int a = d - 1;
        while (a >= 0 && ++idx[a] == per_axis) idx[a--] = 0;
        if (a < 0) break;
    }
    report.ok = true;
    std::ostringstream diag;
    diag << "psi in [" << report.inf_psi << ", " << report.sup_psi << "] over " << report.samples << " samples";
    report.diagnostic = diag.str();
    return report;
}

CoefficientRecord eval_all(const CoefficientSet& coeffs, const Vector& x) {
    if (x.size() != coeffs.dim()) throw std::invalid_argument("point has wrong dimension");
    if (!x.allFinite()) throw std::invalid_argument("point is not finite");
    CoefficientRecord rec;
    rec.dispersion_scale = coeffs.dispersion_scale(x);
    rec.sigma = coeffs.sigma(x);
    rec.diffusion_matrix = coeffs.diffusion_matrix(x);
    rec.drift = coeffs.drift(x);
    rec.degenerate = rec.dispersion_scale == 0.0;

    const std::string where = " at " + format_point(x);
    if (!std::isfinite(rec.dispersion_scale)) throw CoefficientError("dispersion_scale is not finite" + where);
    if (rec.dispersion_scale < 0.0) throw CoefficientError("dispersion_scale is negative" + where);
    if (!rec.sigma.allFinite()) throw CoefficientError("sigma is not finite" + where);
    if (!rec.diffusion_matrix.allFinite()) throw CoefficientError("diffusion_matrix is not finite" + where);
    if (!rec.drift.allFinite()) throw CoefficientError("drift is not finite" + where);
    const Matrix product = rec.sigma * rec.sigma.transpose();
    const double scale = std::max(1.0, product.norm());
    if ((rec.diffusion_matrix - product).norm() > 1e-12 * scale)
        throw CoefficientError("diffusion_matrix differs from sigma sigma^T" + where);
    return rec;
}

}  // namespace degsde
