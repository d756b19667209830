#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sloc/rng.hpp"

using sloc::RngStream;

TEST_CASE("philox known-answer vectors")
{
    // Published reference outputs of the 10-round 4x32 generator for the
    // all-zero, all-ones and pi-digit inputs.
    {
        const auto out = sloc::philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
        CHECK(out.x[0] == 0x6627e8d5u);
        CHECK(out.x[1] == 0xe169c58du);
        CHECK(out.x[2] == 0xbc57ac4cu);
        CHECK(out.x[3] == 0x9b00dbd8u);
    }
    {
        const auto out = sloc::philox4x32(
            {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
            {0xffffffffu, 0xffffffffu});
        CHECK(out.x[0] == 0x408f276du);
        CHECK(out.x[1] == 0x41c83b0eu);
        CHECK(out.x[2] == 0xa20bc7c6u);
        CHECK(out.x[3] == 0x6d5451fdu);
    }
    {
        const auto out = sloc::philox4x32(
            {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
            {0xa4093822u, 0x299f31d0u});
        CHECK(out.x[0] == 0xd16cfe09u);
        CHECK(out.x[1] == 0x94fdccebu);
        CHECK(out.x[2] == 0x5001e420u);
        CHECK(out.x[3] == 0x24126ea1u);
    }
}

TEST_CASE("streams replay and separate")
{
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool all_equal = true, differs_stream = false, differs_seed = false;
    for (int i = 0; i < 256; ++i) {
        const std::uint32_t va = a.next_u32();
        all_equal = all_equal && (va == b.next_u32());
        differs_stream = differs_stream || (va != c.next_u32());
        differs_seed = differs_seed || (va != d.next_u32());
    }
    CHECK(all_equal);
    CHECK(differs_stream);
    CHECK(differs_seed);
}

TEST_CASE("uniform and gaussian moments")
{
    RngStream s(5, 0);
    const int N = 200000;
    double su = 0.0, su2 = 0.0;
    for (int i = 0; i < N; ++i) {
        const double u = s.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        su += u;
        su2 += u * u;
    }
    const double mu = su / N;
    const double vu = su2 / N - mu * mu;
    CHECK(std::abs(mu - 0.5) < 5.0 / std::sqrt(12.0 * N));
    CHECK(std::abs(vu - 1.0 / 12.0) < 0.002);

    RngStream g(5, 1);
    double sg = 0.0, sg2 = 0.0, sg3 = 0.0;
    for (int i = 0; i < N; ++i) {
        const double x = g.next_gaussian();
        sg += x;
        sg2 += x * x;
        sg3 += x * x * x;
    }
    CHECK(std::abs(sg / N) < 5.0 / std::sqrt(double(N)));
    CHECK(std::abs(sg2 / N - 1.0) < 5.0 * std::sqrt(2.0 / N));
    CHECK(std::abs(sg3 / N) < 5.0 * std::sqrt(15.0 / N));
}

TEST_CASE("exponential moments")
{
    RngStream s(11, 3);
    const int N = 200000;
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < N; ++i) {
        const double x = s.next_exponential();
        CHECK(x >= 0.0);
        m += x;
        m2 += x * x;
    }
    CHECK(std::abs(m / N - 1.0) < 5.0 / std::sqrt(double(N)));
    CHECK(std::abs(m2 / N - 2.0) < 5.0 * std::sqrt(20.0 / N));
}

TEST_CASE("gaussian_vector matches scalar draws")
{
    RngStream a(9, 2), b(9, 2);
    const Eigen::VectorXd v = a.gaussian_vector(16);
    for (int i = 0; i < 16; ++i) CHECK(v[i] == b.next_gaussian());
}
