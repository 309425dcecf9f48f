#ifndef VESSELGAN_CORE_RNG_HPP
#define VESSELGAN_CORE_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace vesselgan {

// splitmix64; used to derive independent substream seeds from (seed, tags).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    return mix64(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
}

// Deterministic generator. mt19937_64 output is fixed by the standard; the
// distribution functions below are ours, so sequences are stable across
// platforms (std::uniform_* make no such guarantee).
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, n) without modulo bias.
    uint64_t next_below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double next_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Standard normal via Box-Muller (std::normal_distribution is
    // implementation-defined, so it cannot back determinism tests).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = next_unit();
        } while (u1 <= 0.0);
        u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Returns k distinct indices from [0, n), order by first draw.
    std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k) {
        std::vector<int64_t> idx(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
        shuffle(idx);
        idx.resize(static_cast<size_t>(k));
        return idx;
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vesselgan

#endif
