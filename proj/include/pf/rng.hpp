#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pf {

/// Finalizer from the splitmix64 generator. Used to decorrelate seed mixes:
/// mixing (seed, image index, trial index) through this gives per-task
/// streams that do not depend on scheduling order or worker count.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a) { return splitmix64(seed ^ splitmix64(a)); }

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return splitmix64(mix_seed(seed, a) ^ splitmix64(b + 0x6a09e667f3bcc909ULL));
}

/// Deterministic uniform/normal sampling on top of mt19937_64. Box-Muller is
/// hand-rolled because std::normal_distribution's algorithm is
/// implementation-defined and would break cross-platform reproducibility.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform() {
        // 53-bit mantissa draw in [0, 1).
        return (gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive on both ends
        std::uniform_int_distribution<int> d(lo, hi);
        return d(gen_);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    uint64_t next_u64() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pf
