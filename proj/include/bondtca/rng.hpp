#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

namespace bondtca {

/// Counter-based generator: output i of stream (seed, stream) is a pure
/// function of (seed, stream, i), so independent streams can be generated in
/// any order or in parallel and still give identical bits. Distribution
/// transforms are implemented here rather than taken from <random> so the
/// draws do not depend on the standard library in use.
class CounterRng {
public:
    static constexpr std::string_view algorithm = "splitmix64-ctr/v1";

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) + stream * 0x9e3779b97f4a7c15ULL)) {}

    /// Child stream, independent of this one and of other children.
    CounterRng split(std::uint64_t substream) const { return CounterRng(key_, substream + 1, 0); }

    std::uint64_t next_u64() { return mix(key_ ^ mix(counter_++ * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL)); }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [0, n), rejection-sampled (unbiased).
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (both variates used).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }
    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }
    double exponential(double mean) { return -mean * std::log(uniform()); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    CounterRng(std::uint64_t parent_key, std::uint64_t substream, int)
        : key_(mix(parent_key + substream * 0xd1b54a32d192ed03ULL)) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bondtca
