#pragma once

#include <cstdint>
#include <limits>

namespace ucut {

// Counter-based generator: output i of stream (seed, stream) is a SplitMix64
// finalization of key + (i+1)*golden, where key mixes seed and stream. Output
// depends only on (seed, stream, i), so replicates can be drawn in any order
// and on any thread. Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    Rng(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    // Independent child stream; children of one parent are distinct.
    Rng split(std::uint64_t child) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Master seed plus stream index; engine() rebuilds the same stream each call.
struct RngContract {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    Rng engine() const { return Rng(seed, stream); }
    // Same seed, stream of engine().split(k).
    RngContract child(std::uint64_t k) const { return {seed, engine().split(k).stream()}; }
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace ucut
