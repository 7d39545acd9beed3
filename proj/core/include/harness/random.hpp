#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace harness {

// Counter-based pseudo-random stream. Each (seed, stream) pair yields an
// independent deterministic sequence, so simulation, splitting, draws and
// finite-difference probes can each own a substream without sharing state.
// Output is platform-independent, unlike the std:: distributions.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double next_unit();
    double uniform(double lo, double hi);
    // Box-Muller; mean/sd convention (not variance).
    double normal(double mean, double sd);
    // Uniform integer in [0, n), rejection-sampled (no modulo bias).
    std::size_t below(std::size_t n);

    // Independent stream derived from this one's identity.
    RandomStream substream(std::uint64_t id) const;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates with draws from `rng`; deterministic given the stream.
template <typename T>
void shuffle(std::vector<T>& values, RandomStream& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(values[i - 1], values[j]);
    }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomStream& rng);

}  // namespace harness
