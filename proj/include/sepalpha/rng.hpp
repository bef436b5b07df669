#pragma once

#include <cmath>
#include <cstdint>

namespace sep {

// Counter-based generator: output i is a hash of (key, i), so replicas and
// streams can be seeded independently of execution order and thread count.
// The per-call cost is one splitmix64 finalizer on a Weyl sequence.
class CounterRng {
  public:
    CounterRng(uint64_t seed, uint64_t replica = 0, uint64_t stream = 0) {
        uint64_t h = mix(seed + 0x9E3779B97F4A7C15ull);
        h = mix(h ^ mix(replica + 0xBF58476D1CE4E5B9ull));
        h = mix(h ^ mix(stream + 0x94D049BB133111EBull));
        key_ = h;
    }

    uint64_t next_u64() { return mix(key_ + (ctr_++) * 0x9E3779B97F4A7C15ull); }

    // uniform in [0,1) with 53 random bits
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // strictly positive unit-rate exponential (the low bit is forced so the
    // uniform never hits 0 or 1)
    double exponential() {
        double u = double((next_u64() >> 11) | 1ull) * 0x1.0p-53;
        return -std::log(u);
    }

    // exact Binomial(n, q) as n Bernoulli draws; n is tiny here (n <= alpha)
    int binomial(int n, double q) {
        int k = 0;
        for (int i = 0; i < n; ++i) k += (uniform() < q) ? 1 : 0;
        return k;
    }

    uint64_t counter() const { return ctr_; }

    // mixed (seed, replica, stream) key; identifies the stream uniquely
    uint64_t key() const { return key_; }

  private:
    static uint64_t mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    uint64_t key_ = 0;
    uint64_t ctr_ = 0;
};

} // namespace sep
