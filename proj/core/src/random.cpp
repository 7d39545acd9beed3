#include "harness/random.hpp"

#include <cmath>

#include "harness/errors.hpp"

namespace harness {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ mix64(stream + 0x6A09E667F3BCC909ULL))) {}

std::uint64_t RandomStream::next_u64() {
    return mix64(key_ + kGolden * ++counter_);
}

double RandomStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
}

double RandomStream::normal(double mean, double sd) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + sd * spare_;
    }
    // Box-Muller on (0,1] x [0,1); keeps the paired draw for the next call.
    double u1 = 1.0 - next_unit();
    double u2 = next_unit();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + sd * radius * std::cos(angle);
}

std::size_t RandomStream::below(std::size_t n) {
    if (n == 0) throw ConfigError("RandomStream::below requires n > 0");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return static_cast<std::size_t>(r % n);
}

RandomStream RandomStream::substream(std::uint64_t id) const {
    return RandomStream(key_, id + 1);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomStream& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx, rng);
    return idx;
}

}  // namespace harness
