#pragma once

#include <cstdint>

namespace coklab {

// SplitMix64 finalizer (Steele/Lea/Flood mixing constants).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Per-sample substream key: independent of thread scheduling, so a run is
// reproducible for any thread count.
inline uint64_t substream_seed(uint64_t master, uint64_t index) {
    uint64_t s = splitmix64(master ^ 0x6A09E667F3BCC909ULL);
    return splitmix64(s + index * 0x9E3779B97F4A7C15ULL);
}

// Counter-based generator: the i-th output depends only on (seed, i).
class CounterRng {
  public:
    explicit CounterRng(uint64_t seed = 0) : seed_(seed) {}

    uint64_t next() { return splitmix64(seed_ + counter_++ * 0xD1B54A32D192ED03ULL); }

    // Unbiased draw from {0, ..., n-1} by rejection.
    uint64_t uniform_below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform_real() { return (next() >> 11) * 0x1.0p-53; }

  private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace coklab
