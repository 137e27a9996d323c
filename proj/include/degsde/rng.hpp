#pragma once

#include <array>
#include <cstdint>

namespace degsde {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block of
/// four 32-bit words is a pure function of (counter, key).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept;
};

/// Uniform in the open interval (0, 1) from the top 52 bits of a 64-bit word.
double open_unit_interval(std::uint64_t bits) noexcept;

/// Standard normal draws addressed by (seed, stream, step, coordinate); steps
/// are limited to 48 bits and coordinates to 2^17.
/// Each Philox block yields two normals through Box-Muller, so coordinates
/// 2j and 2j+1 share a block.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) noexcept;

    double draw(std::uint64_t stream, std::uint64_t step, std::uint32_t coordinate) const noexcept;
    /// Writes dim draws for (stream, step) into out.
    void fill(std::uint64_t stream, std::uint64_t step, double* out, int dim) const noexcept;

private:
    std::array<double, 2> pair(std::uint64_t stream, std::uint64_t step, std::uint32_t pair_index) const noexcept;

    Philox4x32::Key key_;
};

}  // namespace degsde
