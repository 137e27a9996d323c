#include "degsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace degsde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Counter round(const Philox4x32::Counter& c, const Philox4x32::Key& k) noexcept {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        ctr = round(ctr, key);
    }
    return ctr;
}

double open_unit_interval(std::uint64_t bits) noexcept {
    // 52 bits keep (k + 1/2) 2^-52 exactly representable, so 1.0 is never reached.
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

NormalStream::NormalStream(std::uint64_t seed) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

std::array<double, 2> NormalStream::pair(std::uint64_t stream, std::uint64_t step,
                                         std::uint32_t pair_index) const noexcept {
    // Counter words: step (48 bits), coordinate pair (16 bits), stream (64 bits).
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>((step >> 32) & 0xFFFFu) | (pair_index << 16),
                                  static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    const auto w = Philox4x32::generate(ctr, key_);
    const std::uint64_t b0 = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
    const std::uint64_t b1 = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
    const double radius = std::sqrt(-2.0 * std::log(open_unit_interval(b0)));
    const double angle = 2.0 * std::numbers::pi * open_unit_interval(b1);
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NormalStream::draw(std::uint64_t stream, std::uint64_t step, std::uint32_t coordinate) const noexcept {
    return pair(stream, step, coordinate / 2)[coordinate % 2];
}

void NormalStream::fill(std::uint64_t stream, std::uint64_t step, double* out, int dim) const noexcept {
    for (int j = 0; j < dim; j += 2) {
        const auto z = pair(stream, step, static_cast<std::uint32_t>(j / 2));
        out[j] = z[0];
        if (j + 1 < dim) out[j + 1] = z[1];
    }
}

}  // namespace degsde
