#include "degsde/grid_field.hpp"

#include "degsde/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace degsde {

GridField::GridField(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> resolution,
                     std::vector<double> values, std::vector<std::uint8_t> valid)
    : lower_(std::move(lower)), upper_(std::move(upper)), resolution_(std::move(resolution)),
      values_(std::move(values)), valid_(std::move(valid)) {
    const std::size_t d = resolution_.size();
    if (d == 0) throw std::invalid_argument("grid must have at least one axis");
    if (lower_.size() != d || upper_.size() != d) throw std::invalid_argument("box bounds do not match dimension");
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) {
        if (resolution_[a] < 2) throw std::invalid_argument("resolution must be at least 2 per axis");
        if (!(upper_[a] > lower_[a]) || !std::isfinite(lower_[a]) || !std::isfinite(upper_[a]))
            throw std::invalid_argument("box must have finite, positive extent on every axis");
        total *= resolution_[a];
    }
    if (values_.size() != total) throw std::invalid_argument("values length does not match resolution");
    if (!valid_.empty() && valid_.size() != total) throw std::invalid_argument("mask length does not match resolution");
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("grid values must be finite");
    strides_.assign(d, 1);
    for (std::size_t a = d - 1; a-- > 0;) strides_[a] = strides_[a + 1] * resolution_[a + 1];
}

GridField GridField::sample(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> resolution,
                            const Sampler& fn) {
    std::size_t total = 1;
    for (auto n : resolution) total *= n;
    GridField g(lower, upper, resolution, std::vector<double>(total, 0.0));
    std::vector<double> values(total);
    for (std::size_t i = 0; i < total; ++i) {
        auto x = g.node(i);
        values[i] = fn(x);
    }
    return g.with_values(std::move(values));
}

GridField GridField::sample_cube(int dim, double half_width, std::size_t n, const Sampler& fn) {
    return sample(std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width),
                  std::vector<std::size_t>(dim, n), fn);
}

double GridField::spacing(int axis) const {
    auto a = static_cast<std::size_t>(axis);
    return (upper_[a] - lower_[a]) / static_cast<double>(resolution_[a] - 1);
}

double GridField::max_spacing() const {
    double h = 0.0;
    for (int a = 0; a < dim(); ++a) h = std::max(h, spacing(a));
    return h;
}

double GridField::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= spacing(a);
    return v;
}

std::size_t GridField::valid_count() const {
    if (valid_.empty()) return values_.size();
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> GridField::multi_index(std::size_t i) const {
    std::vector<std::size_t> idx(resolution_.size());
    for (std::size_t a = 0; a < resolution_.size(); ++a) {
        idx[a] = i / strides_[a];
        i %= strides_[a];
    }
    return idx;
}

std::size_t GridField::linear_index(std::span<const std::size_t> idx) const {
    std::size_t i = 0;
    for (std::size_t a = 0; a < resolution_.size(); ++a) i += idx[a] * strides_[a];
    return i;
}

std::vector<double> GridField::node(std::size_t i) const {
    auto idx = multi_index(i);
    std::vector<double> x(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        x[a] = lower_[a] + static_cast<double>(idx[a]) * spacing(static_cast<int>(a));
    return x;
}

GridField GridField::with_values(std::vector<double> values, std::vector<std::uint8_t> valid) const {
    return GridField(lower_, upper_, resolution_, std::move(values), std::move(valid));
}

bool GridField::same_geometry(const GridField& other) const {
    return lower_ == other.lower_ && upper_ == other.upper_ && resolution_ == other.resolution_;
}

void write_binary(const GridField& f, std::ostream& out) {
    const int d = f.dim();
    io::put_u64(out, static_cast<std::uint64_t>(d));
    for (double v : f.lower()) io::put_f64(out, v);
    for (double v : f.upper()) io::put_f64(out, v);
    for (auto n : f.resolution()) io::put_u64(out, n);
    for (double v : f.values()) io::put_f64(out, v);
}

GridField read_binary(std::istream& in) {
    const auto d = io::get_u64(in);
    if (d == 0 || d > 64) throw std::runtime_error("corrupt grid header: bad dimension");
    std::vector<double> lower(d), upper(d);
    std::vector<std::size_t> res(d);
    for (auto& v : lower) v = io::get_f64(in);
    for (auto& v : upper) v = io::get_f64(in);
    std::size_t total = 1;
    for (auto& n : res) {
        n = io::get_u64(in);
        total *= n;
    }
    std::vector<double> values(total);
    for (auto& v : values) v = io::get_f64(in);
    return GridField(std::move(lower), std::move(upper), std::move(res), std::move(values));
}

void write_csv(const GridField& f, std::ostream& out) {
    for (int a = 0; a < f.dim(); ++a) out << 'x' << a << ',';
    out << "value\n";
    out.precision(17);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f.is_valid(i)) continue;
        for (double c : f.node(i)) out << c << ',';
        out << f[i] << '\n';
    }
}

}  // namespace degsde
