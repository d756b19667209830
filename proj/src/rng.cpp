#include "sloc/rng.hpp"

#include <cmath>

namespace sloc {

namespace {

constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint32_t kMult0 = 0xD2511F53u;
constexpr std::uint32_t kMult1 = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b,
                      std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

PhiloxBlock philox4x32(const std::array<std::uint32_t, 4>& counter,
                       const std::array<std::uint32_t, 2>& key)
{
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kMult0, c[0], hi0, lo0);
        mul_hi_lo(kMult1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return PhiloxBlock{c};
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed),
      stream_(stream),
      block_index_(0),
      buffer_{},
      buffer_pos_(4),
      cached_gaussian_(0.0),
      has_cached_gaussian_(false)
{
}

void RngStream::refill()
{
    // Counter layout: 64-bit block index in the low words, 64-bit stream
    // index in the high words.  The key is the global seed.
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(block_index_),
        static_cast<std::uint32_t>(block_index_ >> 32),
        static_cast<std::uint32_t>(stream_),
        static_cast<std::uint32_t>(stream_ >> 32),
    };
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed_),
        static_cast<std::uint32_t>(seed_ >> 32),
    };
    buffer_ = philox4x32(counter, key).x;
    buffer_pos_ = 0;
    ++block_index_;
}

std::uint32_t RngStream::next_u32()
{
    if (buffer_pos_ >= 4) refill();
    return buffer_[buffer_pos_++];
}

std::uint64_t RngStream::next_u64()
{
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double RngStream::next_unit_positive()
{
    // 53-bit mantissa, shifted into (0,1] so that log() is always finite.
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

double RngStream::next_unit()
{
    const std::uint64_t bits = next_u64() >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

double RngStream::next_gaussian()
{
    if (has_cached_gaussian_) {
        has_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    const double u1 = next_unit_positive();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    cached_gaussian_ = r * std::sin(phi);
    has_cached_gaussian_ = true;
    return r * std::cos(phi);
}

double RngStream::next_exponential()
{
    return -std::log(next_unit_positive());
}

Eigen::VectorXd RngStream::gaussian_vector(Eigen::Index n)
{
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = next_gaussian();
    return v;
}

} // namespace sloc
