#ifndef VESSELGAN_TESTS_TESTUTIL_HPP
#define VESSELGAN_TESTS_TESTUTIL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vesselgan/core/rng.hpp"
#include "vesselgan/core/tensor.hpp"

namespace vgtest {

using vesselgan::Rng;
using vesselgan::Tensor;

inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8});
}

// Central finite differences against an analytic gradient, elementwise.
// Returns the worst relative error.
inline double max_grad_rel_err(Tensor<double>& x, const std::function<double()>& f,
                               const Tensor<double>& analytic, double h = 1e-5) {
    double worst = 0;
    for (int64_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f();
        x[i] = orig - h;
        const double fm = f();
        x[i] = orig;
        const double fd = (fp - fm) / (2 * h);
        const double ad = analytic[i];
        const double err = std::fabs(fd - ad) / std::max({std::fabs(fd), std::fabs(ad), 1e-6});
        worst = std::max(worst, err);
    }
    return worst;
}

inline void fill_uniform(Tensor<double>& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.next_real(lo, hi);
}

template <typename T>
uint64_t fnv1a_bytes(const T* data, size_t n) {
    uint64_t h = 14695981039346656037ULL;
    const auto* p = reinterpret_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n * sizeof(T); ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace vgtest

#endif
