#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mofs {

// splitmix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t s = mix64(base);
    for (auto k : keys) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

// Explicit seeded random stream. Every randomized routine takes one of these
// by reference; there is no global generator.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    // Stream for a sub-task; does not advance this stream.
    Rng derive(std::initializer_list<std::uint64_t> keys) const { return Rng(derive_seed(seed_, keys)); }

    // Uniform in [0, 1).
    double uniform() { return std::generate_canonical<double, 53>(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    template <class It>
    void shuffle(It first, It last) {
        // Fisher-Yates with our own index draws so the permutation only depends on the engine.
        auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            auto j = index(i);
            std::swap(first[i - 1], first[j]);
        }
    }

    // Uniform sample on the probability simplex of the given dimension.
    std::vector<double> simplex(std::size_t dim) {
        std::vector<double> w(dim);
        double sum = 0.0;
        for (auto& x : w) {
            x = exponential(1.0);
            sum += x;
        }
        for (auto& x : w) x /= sum;
        return w;
    }

    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mofs
