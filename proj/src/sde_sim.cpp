#include "degsde/sde_sim.hpp"

#include "degsde/io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace degsde {

namespace {

std::string describe(const Vector& x) {
    std::ostringstream out;
    out.precision(17);
    out << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
    out << ')';
    return out.str();
}

}  // namespace

std::size_t SimConfig::step_count() const {
    const double ratio = horizon / step;
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(ratio));
}

void SimConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("sim.step must be positive");
    if (!(horizon >= step) || !std::isfinite(horizon)) throw std::invalid_argument("sim.horizon must be >= sim.step");
    if (!(explosion_threshold > 0.0)) throw std::invalid_argument("sim.explosion_threshold must be positive");
    if (!(degeneracy_thickness >= 0.0)) throw std::invalid_argument("sim.degeneracy_thickness must be >= 0");
    if (refinement_depth < 0 || refinement_depth > 20) throw std::invalid_argument("sim.refinement_depth out of range");
    if (step_count() >= (std::size_t{1} << 47) >> refinement_depth)
        throw std::invalid_argument("too many steps for the counter layout");
}

BrownianIncrements::BrownianIncrements(std::uint64_t seed, int dim, double step, int refinement_depth)
    : normals_(seed), dim_(dim), step_(step), depth_(refinement_depth) {
    if (dim < 1) throw std::invalid_argument("Brownian increments need dim >= 1");
    if (!(step > 0.0)) throw std::invalid_argument("Brownian increments need a positive step");
    if (refinement_depth < 0) throw std::invalid_argument("refinement depth must be >= 0");
    fine_scale_ = std::sqrt(std::ldexp(step, -refinement_depth));
}

void BrownianIncrements::fill(std::uint64_t path_index, std::uint64_t step_index, double* out) const {
    auto to_lattice = [this](double z) {
        return std::ldexp(std::nearbyint(std::ldexp(fine_scale_ * z, kLatticeBits)), -kLatticeBits);
    };
    if (depth_ == 0) {
        normals_.fill(path_index, step_index, out, dim_);
        for (int a = 0; a < dim_; ++a) out[a] = to_lattice(out[a]);
        return;
    }
    const std::size_t leaves = std::size_t{1} << depth_;
    // Finest draws, then pairwise sums level by level. Lattice values make
    // every partial sum exact.
    std::vector<double> buf(leaves * dim_);
    const std::uint64_t first = step_index << depth_;
    for (std::size_t j = 0; j < leaves; ++j) {
        double* z = buf.data() + j * dim_;
        normals_.fill(path_index, first + j, z, dim_);
        for (int a = 0; a < dim_; ++a) z[a] = to_lattice(z[a]);
    }
    for (std::size_t width = leaves; width > 1; width /= 2)
        for (std::size_t j = 0; j < width / 2; ++j)
            for (int a = 0; a < dim_; ++a)
                buf[j * dim_ + a] = buf[2 * j * dim_ + a] + buf[(2 * j + 1) * dim_ + a];
    for (int a = 0; a < dim_; ++a) out[a] = buf[a];
}

Vector BrownianIncrements::increment(std::uint64_t path_index, std::uint64_t step_index) const {
    Vector v(dim_);
    fill(path_index, step_index, v.data());
    return v;
}

PathSample em_path(const CoefficientSet& coeffs, const Vector& start, const SimConfig& cfg,
                   std::uint64_t path_index) {
    cfg.validate();
    const int d = coeffs.dim();
    if (start.size() != d) throw std::invalid_argument("start point has wrong dimension");
    if (!start.allFinite()) throw std::invalid_argument("start point is not finite");

    const BrownianIncrements noise(cfg.seed, d, cfg.step, cfg.refinement_depth);
    const std::size_t n = cfg.step_count();
    const double h = cfg.step;

    PathSample path;
    path.dim = d;
    path.step = h;
    path.horizon = cfg.horizon;
    path.seed = cfg.seed;
    path.path_index = path_index;
    path.states.reserve((n + 1) * d);
    path.increments.reserve(n * d);
    path.states.insert(path.states.end(), start.data(), start.data() + d);

    auto exploded_at = [&](std::size_t k, const Vector& x) {
        if (!x.allFinite()) {
            path.status = PathStatus::exploded;
            path.explosion_step = k;
            path.diagnostic = "non-finite state at step " + std::to_string(k);
            return true;
        }
        if (x.norm() > cfg.explosion_threshold) {
            path.status = PathStatus::exploded;
            path.explosion_step = k;
            std::ostringstream msg;
            msg << "|X| exceeded " << cfg.explosion_threshold << " at step " << k;
            path.diagnostic = msg.str();
            return true;
        }
        return false;
    };

    Vector x = start;
    Vector dw(d);
    for (std::size_t k = 0; k < n; ++k) {
        if (exploded_at(k, x)) return path;
        const double s = coeffs.dispersion_scale(x);
        const Matrix sig = coeffs.sigma(x);
        const Vector g = coeffs.drift(x);
        if (!std::isfinite(s) || !sig.allFinite() || !g.allFinite())
            throw CoefficientError("coefficient evaluation failed at " + describe(x));
        noise.fill(path_index, k, dw.data());
        x = x + s * (sig * dw) + h * g;
        path.increments.insert(path.increments.end(), dw.data(), dw.data() + d);
        path.states.insert(path.states.end(), x.data(), x.data() + d);
    }
    exploded_at(n, x);
    return path;
}

std::optional<std::size_t> CoupledPair::joint_exit_step(int n) const {
    const auto a = first_exit_step(first, n);
    const auto b = first_exit_step(second, n);
    if (a && b) return std::min(*a, *b);
    return a ? a : b;
}

CoupledPair em_coupled_pair(const CoefficientSet& coeffs, const Vector& start1, const Vector& start2,
                            const SimConfig& cfg, std::uint64_t path_index) {
    CoupledPair pair;
    pair.first = em_path(coeffs, start1, cfg, path_index);
    pair.second = em_path(coeffs, start2, cfg, path_index);
    const int d = coeffs.dim();
    const std::size_t m = std::min(pair.first.state_count(), pair.second.state_count());
    pair.distance.resize(m * d);
    for (std::size_t i = 0; i < m * d; ++i) pair.distance[i] = pair.first.states[i] - pair.second.states[i];
    return pair;
}

std::optional<std::size_t> first_exit_step(const PathSample& path, int n) {
    if (n < 2) throw std::invalid_argument("first_exit_step requires n >= 2");
    const double radius = n - 1.0;
    for (std::size_t k = 0; k < path.state_count(); ++k)
        if (path.state(k).norm() >= radius) return k;
    return std::nullopt;
}

double occupation_time(const PathSample& path, const CoefficientSet& coeffs, double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("occupation thickness must be >= 0");
    const std::size_t states = path.state_count();
    if (states < 2) return 0.0;
    std::size_t hits = 0;
    Vector x(path.dim);
    for (std::size_t k = 0; k + 1 < states; ++k) {
        x = path.state(k);
        if (coeffs.dispersion_scale(x) <= eps) ++hits;
    }
    return static_cast<double>(hits) * path.step;
}

void write_trajectory_binary(const PathSample& path, std::ostream& out) {
    io::put_u64(out, static_cast<std::uint64_t>(path.dim));
    io::put_f64(out, path.step);
    io::put_f64(out, path.horizon);
    io::put_u64(out, path.seed);
    io::put_u64(out, path.path_index);
    for (double v : path.states) io::put_f64(out, v);
}

PathSample read_trajectory_binary(std::istream& in) {
    PathSample path;
    const auto d = io::get_u64(in);
    if (d == 0 || d > 4096) throw std::runtime_error("corrupt trajectory header: bad dimension");
    path.dim = static_cast<int>(d);
    path.step = io::get_f64(in);
    path.horizon = io::get_f64(in);
    path.seed = io::get_u64(in);
    path.path_index = io::get_u64(in);
    while (in.peek() != std::char_traits<char>::eof()) path.states.push_back(io::get_f64(in));
    if (path.states.size() % d != 0) throw std::runtime_error("truncated trajectory payload");
    return path;
}

void write_trajectory_csv(const PathSample& path, std::ostream& out) {
    out << "step,time";
    for (int a = 0; a < path.dim; ++a) out << ",x" << a;
    out << '\n';
    out.precision(17);
    for (std::size_t k = 0; k < path.state_count(); ++k) {
        out << k << ',' << path.time(k);
        for (int a = 0; a < path.dim; ++a) out << ',' << path.states[k * path.dim + a];
        out << '\n';
    }
}

}  // namespace degsde
