#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sfa {

// All randomness in the library flows from one master seed through named
// streams, e.g. "audit.k500.s17". Stream seeds are derived by hashing the
// stream name into the master seed, so tasks can run in any order (or in
// parallel) and still reproduce byte-identical results.

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t stream_seed(uint64_t master, std::string_view name) {
    return splitmix64(master ^ splitmix64(fnv1a64(name)));
}

// mt19937_64 engine with hand-rolled uniform/normal draws; std::normal_distribution
// is implementation-defined, which would break cross-toolchain reproducibility.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    Rng(uint64_t master, std::string_view name) : eng_(stream_seed(master, name)) {}

    // uniform on (0, 1]
    double uniform() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, bound)
    uint64_t below(uint64_t bound) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % bound;
    }

    // standard normal via Box-Muller; the second value of each pair is cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_normal(double* out, int n) {
        for (int i = 0; i < n; ++i) out[i] = normal();
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sfa
