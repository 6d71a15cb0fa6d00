#include "ram/rng.hpp"

#include <cmath>

namespace ram {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), eng_(mix64(seed)) {}

std::uint64_t Rng::next_u64() {
    return eng_();
}

double Rng::uniform01() {
    return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

int Rng::uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
}

double Rng::normal() {
    const double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * M_PI * u2);
}

std::pair<double, double> Rng::normal2() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
}

Rng Rng::child(std::uint64_t stream) const {
    return Rng(mix64(seed_ ^ mix64(stream + 1)));
}

} // namespace ram
