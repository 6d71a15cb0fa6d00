#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ram {

// Deterministic random stream. All distribution transforms are implemented
// here from raw engine output, so two runs with the same seed produce the
// same values regardless of the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01();
    double uniform(double lo, double hi);
    // Inclusive integer range.
    int uniform_int(int lo, int hi);

    // Standard normal via Box-Muller; no cached spare state.
    double normal();
    std::pair<double, double> normal2();

    // Independent stream derived from this rng's seed and a stream id.
    // Pure function of (seed, stream): children are reproducible no matter
    // how much the parent has been consumed.
    Rng child(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

// splitmix64 mixing step; used for seeding and stream derivation.
std::uint64_t mix64(std::uint64_t x);

// Fisher-Yates shuffle driven by an Rng, so shuffles are seed-stable.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
        std::swap(v[static_cast<std::size_t>(i)],
                  v[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    }
}

} // namespace ram
