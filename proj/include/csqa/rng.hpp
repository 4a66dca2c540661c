#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace csqa {

// Deterministic randomness for experiments. std::mt19937_64 has a
// standardized sequence, but the standard distributions do not, so the
// mappings below are spelled out by hand. Same seed, same results,
// on every platform.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased index in [0, n) via rejection sampling.
    size_t index(size_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<size_t>(x % n);
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

// Seeded FNV-1a over the bytes of a token.
inline uint64_t hash_token(std::string_view token, uint64_t seed) {
    uint64_t h = 0xcbf29ce484222325ull ^ seed;
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace csqa
