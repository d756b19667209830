#ifndef SLOC_RNG_HPP
#define SLOC_RNG_HPP

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace sloc {

// Counter-based random number generation (Philox 4x32-10).
//
// Every consumer owns an RngStream identified by (seed, stream).  Streams
// are statistically independent and their output depends only on the pair
// of identifiers and the number of values drawn so far, never on which
// thread runs them or in what order.  That is what makes multi-threaded
// estimators reproduce byte-identical results at any thread count: work is
// partitioned by stream index up front and each block drains its own
// stream sequentially.

struct PhiloxBlock {
    std::array<std::uint32_t, 4> x;
};

// One keyed Philox evaluation: 10 rounds over a 128-bit counter with a
// 64-bit key.  Pure function, exposed for known-answer tests.
PhiloxBlock philox4x32(const std::array<std::uint32_t, 4>& counter,
                       const std::array<std::uint32_t, 2>& key);

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    // Raw draws.  A block yields four 32-bit words, consumed in order.
    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on (0,1] (safe under log) and [0,1).
    double next_unit_positive();
    double next_unit();

    // Standard normal via Box-Muller; pairs are generated together and the
    // spare is cached, so draws per call alternate between 2 and 0 uniforms.
    double next_gaussian();

    // Exp(1).
    double next_exponential();

    Eigen::VectorXd gaussian_vector(Eigen::Index n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_index_;
    std::array<std::uint32_t, 4> buffer_;
    int buffer_pos_; // next unread word in buffer_, 4 = empty
    double cached_gaussian_;
    bool has_cached_gaussian_;
};

} // namespace sloc

#endif
