#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace degsde {

/// Scalar field sampled on the nodes of a regular box grid. Nodes are stored
/// row-major (last axis fastest); node i along axis a sits at
/// lower[a] + i * spacing(a). Operations whose stencil would leave the box mark
/// the affected nodes invalid instead of renormalising; invalid nodes hold 0.
class GridField {
public:
    GridField(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> resolution,
              std::vector<double> values, std::vector<std::uint8_t> valid = {});

    using Sampler = std::function<double(std::span<const double>)>;
    static GridField sample(std::vector<double> lower, std::vector<double> upper,
                            std::vector<std::size_t> resolution, const Sampler& fn);
    /// Cube [-half_width, half_width]^dim with n nodes per axis.
    static GridField sample_cube(int dim, double half_width, std::size_t n, const Sampler& fn);

    int dim() const noexcept { return static_cast<int>(resolution_.size()); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    const std::vector<std::size_t>& resolution() const noexcept { return resolution_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    double spacing(int axis) const;
    double max_spacing() const;
    double cell_volume() const;
    std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

    bool has_mask() const noexcept { return !valid_.empty(); }
    bool is_valid(std::size_t i) const noexcept { return valid_.empty() || valid_[i] != 0; }
    const std::vector<std::uint8_t>& mask() const noexcept { return valid_; }
    std::size_t valid_count() const;

    double operator[](std::size_t i) const { return values_[i]; }
    std::vector<std::size_t> multi_index(std::size_t i) const;
    std::size_t linear_index(std::span<const std::size_t> idx) const;
    std::vector<double> node(std::size_t i) const;

    /// Same geometry, new values and mask.
    GridField with_values(std::vector<double> values, std::vector<std::uint8_t> valid = {}) const;
    bool same_geometry(const GridField& other) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::size_t> resolution_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
};

/// Flat little-endian layout: dim, lower[d], upper[d], resolution[d] as 64-bit
/// words, then row-major float64 values.
void write_binary(const GridField& f, std::ostream& out);
GridField read_binary(std::istream& in);

/// One row per node: coordinates then value; invalid nodes are skipped.
void write_csv(const GridField& f, std::ostream& out);

}  // namespace degsde
