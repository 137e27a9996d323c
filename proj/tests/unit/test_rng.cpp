#include "degsde/rng.hpp"
#include "degsde/sde_sim.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace degsde;

// Known-answer vectors published with the Random123 library.
TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("open unit interval never hits the endpoints") {
    CHECK(open_unit_interval(0) > 0.0);
    CHECK(open_unit_interval(~std::uint64_t{0}) < 1.0);
    CHECK(open_unit_interval(std::uint64_t{1} << 63) == doctest::Approx(0.5));
}

TEST_CASE("normal stream is addressable and reproducible") {
    const NormalStream a(42), b(42), c(43);
    CHECK(a.draw(3, 17, 5) == b.draw(3, 17, 5));
    CHECK(a.draw(3, 17, 5) != c.draw(3, 17, 5));
    CHECK(a.draw(3, 17, 5) != a.draw(4, 17, 5));
    CHECK(a.draw(3, 17, 5) != a.draw(3, 18, 5));
    double buf[7];
    a.fill(9, 1000, buf, 7);
    for (std::uint32_t j = 0; j < 7; ++j) CHECK(buf[j] == a.draw(9, 1000, j));
}

TEST_CASE("normal stream moments over a million draws") {
    const NormalStream s(2024);
    const std::size_t n = 1'000'000;
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
    std::size_t tail = 0;
    double buf[4];
    for (std::size_t k = 0; k < n / 4; ++k) {
        s.fill(k % 97, k, buf, 4);
        for (double z : buf) {
            m1 += z;
            m2 += z * z;
            m3 += z * z * z;
            m4 += z * z * z * z;
            tail += std::abs(z) > 1.959963984540054;
        }
    }
    m1 /= n;
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Five standard errors of each sample moment.
    CHECK(std::abs(m1) < 5.0 * std::sqrt(1.0 / n));
    CHECK(std::abs(m2 - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(m3) < 5.0 * std::sqrt(15.0 / n));
    CHECK(std::abs(m4 - 3.0) < 5.0 * std::sqrt(96.0 / n));
    const double p = static_cast<double>(tail) / n;
    CHECK(std::abs(p - 0.05) < 5.0 * std::sqrt(0.05 * 0.95 / n));
}

TEST_CASE("adjacent coordinates are uncorrelated") {
    const NormalStream s(7);
    const std::size_t n = 200'000;
    double c01 = 0, c12 = 0;
    double buf[3];
    for (std::size_t k = 0; k < n; ++k) {
        s.fill(0, k, buf, 3);
        c01 += buf[0] * buf[1];
        c12 += buf[1] * buf[2];
    }
    CHECK(std::abs(c01 / n) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(c12 / n) < 5.0 / std::sqrt(double(n)));
}

TEST_CASE("brownian increments have variance h and live on the dyadic lattice") {
    const double h = 1e-3;
    const BrownianIncrements w(11, 3, h);
    const std::size_t n = 300'000;
    double m2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Vector dw = w.increment(k % 13, k);
        for (int a = 0; a < 3; ++a) {
            m2 += dw[a] * dw[a];
            const double scaled = std::ldexp(dw[a], BrownianIncrements::kLatticeBits);
            CHECK(scaled == std::nearbyint(scaled));
        }
    }
    m2 /= 3.0 * n;
    CHECK(std::abs(m2 / h - 1.0) < 5.0 * std::sqrt(2.0 / (3.0 * n)));
}

TEST_CASE("coarse increments are exact pairwise sums of fine ones") {
    const double h = std::ldexp(1.0, -6);
    for (int depth = 1; depth <= 3; ++depth) {
        const BrownianIncrements coarse(5, 4, h, depth);
        const BrownianIncrements fine(5, 4, h / 2, depth - 1);
        for (std::uint64_t path = 0; path < 5; ++path) {
            for (std::uint64_t k = 0; k < 64; ++k) {
                const Vector a = coarse.increment(path, k);
                const Vector b = fine.increment(path, 2 * k) + fine.increment(path, 2 * k + 1);
                CHECK(a == b);
            }
        }
    }
}

TEST_CASE("refined increments keep the coarse variance") {
    const double h = 1e-2;
    const BrownianIncrements w(3, 2, h, 3);
    const std::size_t n = 100'000;
    double m2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Vector dw = w.increment(1, k);
        m2 += dw.squaredNorm();
    }
    m2 /= 2.0 * n;
    CHECK(std::abs(m2 / h - 1.0) < 5.0 * std::sqrt(2.0 / (2.0 * n)));
}

TEST_CASE("increment mean and variance per coordinate over a million draws") {
    const double h = 1e-3;
    const BrownianIncrements w(99, 3, h);
    const std::size_t n = 1'000'000;
    double s1[3] = {0, 0, 0}, s2[3] = {0, 0, 0};
    double buf[3];
    for (std::size_t k = 0; k < n; ++k) {
        w.fill(k / 1000, k % 1000, buf);
        for (int a = 0; a < 3; ++a) {
            s1[a] += buf[a];
            s2[a] += buf[a] * buf[a];
        }
    }
    for (int a = 0; a < 3; ++a) {
        const double mean = s1[a] / n;
        const double var = s2[a] / n - mean * mean;
        CHECK(std::abs(mean) < 4.0 * std::sqrt(h / n));
        CHECK(std::abs(var / h - 1.0) < 0.01);
    }
}
