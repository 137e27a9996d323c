#include "degsde/analysis.hpp"

#include "degsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace degsde {

namespace {

constexpr double kBallSlack = 1e-12;

// A ball decomposed into runs along the last (contiguous) axis: for every
// offset in the leading axes, the run covers last-axis offsets [-half, half].
struct BallRuns {
    std::vector<long> row_delta;
    std::vector<long> half;
    double count = 0.0;
};

std::vector<std::size_t> row_strides(const GridField& f) {
    const int d = f.dim();
    const std::size_t n_last = f.resolution().back();
    std::vector<std::size_t> s(d > 1 ? d - 1 : 0);
    for (int a = 0; a + 1 < d; ++a) s[a] = f.stride(a) / n_last;
    return s;
}

// Enumerates integer offsets o in the leading axes with |o_a| <= reach[a].
template <class Fn>
void for_each_offset(const std::vector<long>& reach, Fn&& fn) {
    std::vector<long> o(reach.size());
    for (std::size_t a = 0; a < reach.size(); ++a) o[a] = -reach[a];
    while (true) {
        fn(o);
        std::size_t a = reach.size();
        while (a > 0) {
            --a;
            if (o[a] < reach[a]) {
                ++o[a];
                break;
            }
            o[a] = -reach[a];
            if (a == 0) return;
        }
        if (reach.empty()) return;
    }
}

BallRuns ball_runs(const GridField& f, double r) {
    const int d = f.dim();
    const double h_last = f.spacing(d - 1);
    std::vector<long> reach(d - 1);
    for (int a = 0; a + 1 < d; ++a) reach[a] = static_cast<long>(std::floor(r / f.spacing(a) + kBallSlack));
    const auto rs = row_strides(f);
    const double r2 = r * r * (1.0 + kBallSlack);
    BallRuns runs;
    for_each_offset(reach, [&](const std::vector<long>& o) {
        double s = 0.0;
        long delta = 0;
        for (std::size_t a = 0; a < o.size(); ++a) {
            const double c = static_cast<double>(o[a]) * f.spacing(static_cast<int>(a));
            s += c * c;
            delta += o[a] * static_cast<long>(rs[a]);
        }
        if (s > r2) return;
        const long w = static_cast<long>(std::floor(std::sqrt(std::max(0.0, r2 - s)) / h_last + kBallSlack));
        runs.row_delta.push_back(delta);
        runs.half.push_back(w);
        runs.count += static_cast<double>(2 * w + 1);
    });
    return runs;
}

// True when the ball of radius r around the node fits inside the box.
bool ball_inside(const GridField& f, const std::vector<std::size_t>& idx, double r) {
    for (int a = 0; a < f.dim(); ++a) {
        const double h = f.spacing(a);
        const double lo = static_cast<double>(idx[a]) * h;
        const double hi = static_cast<double>(f.resolution()[a] - 1 - idx[a]) * h;
        if (lo < r * (1.0 - kBallSlack) || hi < r * (1.0 - kBallSlack)) return false;
    }
    return true;
}

}  // namespace

std::vector<double> default_radius_menu(const GridField& f, std::size_t count, std::optional<double> max_radius) {
    if (count == 0) throw std::invalid_argument("radius menu must be nonempty");
    double extent = f.upper()[0] - f.lower()[0];
    for (int a = 1; a < f.dim(); ++a) extent = std::min(extent, f.upper()[a] - f.lower()[a]);
    const double lo = 2.0 * f.max_spacing();
    const double hi = max_radius.value_or(0.5 * extent);
    if (!(hi >= lo)) throw std::invalid_argument("grid too coarse for the requested radius menu");
    std::vector<double> radii(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = count == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        radii[k] = lo * std::pow(hi / lo, t);
    }
    radii.back() = hi;
    return radii;
}

GridField maximal_function(const GridField& f, std::span<const double> radii) {
    if (radii.empty()) throw std::invalid_argument("maximal_function: radius list is empty");
    const double cell = f.max_spacing();
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0) || (k > 0 && radii[k] <= radii[k - 1]))
            throw std::invalid_argument("maximal_function: radii must be positive and strictly ascending");
        if (radii[k] < cell) {
            std::ostringstream msg;
            msg << "maximal_function: radius " << radii[k] << " is smaller than one grid cell (" << cell << ")";
            throw std::invalid_argument(msg.str());
        }
    }

    const std::size_t n_last = f.resolution().back();
    const std::size_t rows = f.size() / n_last;
    const std::size_t width = n_last + 1;

    // Row prefix sums of |f| and of the invalid-node indicator.
    std::vector<double> prefix(rows * width, 0.0);
    std::vector<double> bad(f.has_mask() ? rows * width : 0, 0.0);
    for (std::size_t row = 0; row < rows; ++row) {
        double acc = 0.0, acc_bad = 0.0;
        for (std::size_t c = 0; c < n_last; ++c) {
            const std::size_t i = row * n_last + c;
            acc += std::abs(f[i]);
            prefix[row * width + c + 1] = acc;
            if (!bad.empty()) {
                acc_bad += f.is_valid(i) ? 0.0 : 1.0;
                bad[row * width + c + 1] = acc_bad;
            }
        }
    }

    std::vector<BallRuns> balls;
    balls.reserve(radii.size());
    for (double r : radii) balls.push_back(ball_runs(f, r));
    const double r_max = radii.back();

    std::vector<double> out(f.size(), 0.0);
    std::vector<std::uint8_t> valid(f.size(), 0);
    parallel_for(rows, 0, [&](std::size_t row) {
        for (std::size_t c = 0; c < n_last; ++c) {
            const std::size_t i = row * n_last + c;
            if (!ball_inside(f, f.multi_index(i), r_max)) continue;
            const auto& big = balls.back();
            if (!bad.empty()) {
                double hits = 0.0;
                for (std::size_t k = 0; k < big.row_delta.size(); ++k) {
                    const std::size_t rr = static_cast<std::size_t>(static_cast<long>(row) + big.row_delta[k]);
                    const long w = big.half[k];
                    hits += bad[rr * width + c + w + 1] - bad[rr * width + c - w];
                }
                if (hits > 0.0) continue;
            }
            double best = std::abs(f[i]);
            for (const auto& ball : balls) {
                double sum = 0.0;
                for (std::size_t k = 0; k < ball.row_delta.size(); ++k) {
                    const std::size_t rr = static_cast<std::size_t>(static_cast<long>(row) + ball.row_delta[k]);
                    const long w = ball.half[k];
                    sum += prefix[rr * width + c + w + 1] - prefix[rr * width + c - w];
                }
                best = std::max(best, sum / ball.count);
            }
            out[i] = best;
            valid[i] = 1;
        }
    }, 1);
    return f.with_values(std::move(out), std::move(valid));
}

GridField gradient_norm(const GridField& f) {
    const int d = f.dim();
    std::vector<double> out(f.size(), 0.0);
    std::vector<std::uint8_t> valid(f.size(), 1);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto idx = f.multi_index(i);
        double sq = 0.0;
        bool ok = f.is_valid(i);
        for (int a = 0; a < d && ok; ++a) {
            const std::size_t s = f.stride(a);
            const std::size_t n = f.resolution()[a];
            const double h = f.spacing(a);
            std::size_t lo = i, hi = i;
            double span = h;
            if (idx[a] == 0) {
                hi = i + s;
            } else if (idx[a] + 1 == n) {
                lo = i - s;
            } else {
                lo = i - s;
                hi = i + s;
                span = 2.0 * h;
            }
            if (!f.is_valid(lo) || !f.is_valid(hi)) {
                ok = false;
                break;
            }
            const double g = (f[hi] - f[lo]) / span;
            sq += g * g;
        }
        if (ok) {
            out[i] = std::sqrt(sq);
        } else {
            valid[i] = 0;
        }
    }
    return f.with_values(std::move(out), std::move(valid));
}

std::vector<NodePair> sample_node_pairs(const GridField& support, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < support.size(); ++i)
        if (support.is_valid(i)) nodes.push_back(i);
    if (nodes.size() < 2) throw std::invalid_argument("fewer than two valid nodes to pair");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    std::vector<NodePair> pairs;
    pairs.reserve(count);
    while (pairs.size() < count) {
        const auto a = nodes[pick(rng)];
        const auto b = nodes[pick(rng)];
        if (a != b) pairs.push_back({a, b});
    }
    return pairs;
}

PairCheckReport check_pointwise_maximal_bound(const GridField& f, std::span<const NodePair> pairs, double constant,
                                              std::span<const double> radii) {
    if (!(constant > 0.0)) throw std::invalid_argument("pair check constant must be positive");
    const GridField grad = gradient_norm(f);
    const GridField mgrad = maximal_function(grad, radii);

    PairCheckReport rep;
    rep.constant = constant;
    double worst = -1.0;
    for (const auto& p : pairs) {
        if (p.first >= f.size() || p.second >= f.size()) throw std::out_of_range("node pair outside the grid");
        if (!mgrad.is_valid(p.first) || !mgrad.is_valid(p.second)) {
            ++rep.skipped;
            continue;
        }
        const auto x = f.node(p.first);
        const auto y = f.node(p.second);
        double dist2 = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) dist2 += (x[a] - y[a]) * (x[a] - y[a]);
        const double lhs = std::abs(f[p.first] - f[p.second]);
        const double base = std::sqrt(dist2) * (mgrad[p.first] + mgrad[p.second]);
        ++rep.evaluated;
        if (lhs <= constant * base) ++rep.satisfied;
        const double ratio = lhs == 0.0 ? 0.0 : (base > 0.0 ? lhs / base : INFINITY);
        if (ratio > worst) {
            worst = ratio;
            rep.worst = p;
        }
    }
    rep.empirical_constant = std::max(worst, 0.0);
    rep.fraction = rep.evaluated ? static_cast<double>(rep.satisfied) / static_cast<double>(rep.evaluated) : 0.0;
    return rep;
}

double lp_norm(const GridField& f, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm requires finite p >= 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f.is_valid(i)) sum += p == 1.0 ? std::abs(f[i]) : std::pow(std::abs(f[i]), p);
    sum *= f.cell_volume();
    return p == 1.0 ? sum : std::pow(sum, 1.0 / p);
}

double Mollifier::profile(double scaled_radius) {
    if (scaled_radius >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - scaled_radius * scaled_radius));
}

Mollifier::Mollifier(const GridField& grid, int m) : m_(m), cell_volume_(grid.cell_volume()) {
    if (m < 1) throw std::invalid_argument("mollifier index m must be >= 1");
    const double radius = 1.0 / m;
    if (radius < 2.0 * grid.max_spacing()) {
        std::ostringstream msg;
        msg << "mollifier support 1/m = " << radius << " spans fewer than 2 grid cells (spacing "
            << grid.max_spacing() << "); use a finer grid";
        throw std::invalid_argument(msg.str());
    }
    const int d = grid.dim();
    std::vector<long> reach(d);
    for (int a = 0; a < d; ++a) reach[a] = static_cast<long>(std::floor(radius / grid.spacing(a)));
    double total = 0.0;
    for_each_offset(reach, [&](const std::vector<long>& o) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) {
            const double c = static_cast<double>(o[a]) * grid.spacing(a);
            s += c * c;
        }
        const double v = profile(m * std::sqrt(s));
        if (v <= 0.0) return;
        taps_.push_back({o, v});
        total += v;
    });
    const double norm = total * cell_volume_;
    for (auto& t : taps_) t.weight /= norm;
}

double Mollifier::discrete_mass() const {
    double s = 0.0;
    for (const auto& t : taps_) s += t.weight;
    return s * cell_volume_;
}

GridField mollify(const GridField& f, int m) {
    const Mollifier eta(f, m);
    const int d = f.dim();
    const double radius = eta.support_radius();
    std::vector<long> tap_delta;
    tap_delta.reserve(eta.taps().size());
    for (const auto& t : eta.taps()) {
        long delta = 0;
        for (int a = 0; a < d; ++a) delta += t.offset[a] * static_cast<long>(f.stride(a));
        tap_delta.push_back(delta);
    }
    const double cv = f.cell_volume();

    std::vector<double> out(f.size(), 0.0);
    std::vector<std::uint8_t> valid(f.size(), 0);
    parallel_for(f.size(), 0, [&](std::size_t i) {
        if (!ball_inside(f, f.multi_index(i), radius)) return;
        double acc = 0.0;
        for (std::size_t k = 0; k < tap_delta.size(); ++k) {
            const auto j = static_cast<std::size_t>(static_cast<long>(i) + tap_delta[k]);
            if (!f.is_valid(j)) return;
            acc += eta.taps()[k].weight * f[j];
        }
        out[i] = acc * cv;
        valid[i] = 1;
    }, 4096);
    return f.with_values(std::move(out), std::move(valid));
}

double cutoff_profile(double radius, int n) {
    if (radius <= n) return 1.0;
    if (radius >= n + 1.0) return 0.0;
    const double s = radius - n;
    return 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

GridField cutoff_extend(const GridField& f, int n) {
    if (n < 0) throw std::invalid_argument("cutoff radius index must be >= 0");
    const double need = n + 1.0;
    for (int a = 0; a < f.dim(); ++a) {
        if (f.lower()[a] > -need || f.upper()[a] < need) {
            std::ostringstream msg;
            msg << "cutoff_extend: box must contain B_" << n + 1 << ", i.e. [-" << need << ", " << need
                << "] on every axis";
            throw std::invalid_argument(msg.str());
        }
    }
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        double r2 = 0.0;
        for (double c : f.node(i)) r2 += c * c;
        const double chi = cutoff_profile(std::sqrt(r2), n);
        out[i] = chi == 1.0 ? f[i] : chi * f[i];
    }
    return f.with_values(std::move(out), f.mask());
}

GridField subtract(const GridField& a, const GridField& b) {
    if (!a.same_geometry(b)) throw std::invalid_argument("subtract: fields live on different grids");
    std::vector<double> out(a.size(), 0.0);
    std::vector<std::uint8_t> valid(a.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.is_valid(i) && b.is_valid(i)) {
            out[i] = a[i] - b[i];
            valid[i] = 1;
        }
    }
    return a.with_values(std::move(out), std::move(valid));
}

}  // namespace degsde
