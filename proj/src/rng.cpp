#include "ucut/rng.hpp"

namespace ucut {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(seed ^ mix64(stream + kGolden))) {}

Rng::result_type Rng::operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    // Rejection keeps the result unbiased.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = (*this)();
        if (r >= threshold) return r % bound;
    }
}

Rng Rng::split(std::uint64_t child) const {
    return Rng(seed_, mix64(stream_ * kGolden + mix64(child + 1)));
}

}  // namespace ucut
