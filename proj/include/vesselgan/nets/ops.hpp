#ifndef VESSELGAN_NETS_OPS_HPP
#define VESSELGAN_NETS_OPS_HPP

#include <cmath>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vesselgan/core/gemm.hpp"
#include "vesselgan/core/rng.hpp"
#include "vesselgan/core/tensor.hpp"

namespace vesselgan::ops {

// ---------------------------------------------------------------------------
// Convolution. Activations are NHWC. Kernels are stored row-major as
// [kh*kw*in_c, out_c] so that im2col rows multiply straight into NHWC output.
// ---------------------------------------------------------------------------

struct ConvGeom {
    int64_t in_h = 0, in_w = 0, in_c = 0;
    int64_t out_c = 0;
    int64_t kh = 1, kw = 1;
    int64_t stride = 1;
    int64_t pad = 0;

    int64_t out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
    int64_t out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
    int64_t patch_len() const { return kh * kw * in_c; }
};

// cols: [n*out_h*out_w, kh*kw*in_c]
template <typename T>
void im2col(const ConvGeom& g, const Tensor<T>& x, std::vector<T>& cols) {
    const int64_t n = x.dim(0), oh = g.out_h(), ow = g.out_w(), k = g.patch_len();
    cols.resize(static_cast<size_t>(n * oh * ow * k));
    const T* xp = x.data();
    const int64_t row_stride = g.in_w * g.in_c;
    const int64_t img_stride = g.in_h * row_stride;
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < n; ++b) {
        for (int64_t r = 0; r < oh; ++r) {
            for (int64_t c = 0; c < ow; ++c) {
                T* dst = cols.data() + ((b * oh + r) * ow + c) * k;
                for (int64_t i = 0; i < g.kh; ++i) {
                    const int64_t ih = r * g.stride - g.pad + i;
                    if (ih < 0 || ih >= g.in_h) {
                        std::memset(dst, 0, sizeof(T) * static_cast<size_t>(g.kw * g.in_c));
                        dst += g.kw * g.in_c;
                        continue;
                    }
                    for (int64_t j = 0; j < g.kw; ++j) {
                        const int64_t iw = c * g.stride - g.pad + j;
                        if (iw < 0 || iw >= g.in_w) {
                            std::memset(dst, 0, sizeof(T) * static_cast<size_t>(g.in_c));
                        } else {
                            std::memcpy(dst, xp + b * img_stride + ih * row_stride + iw * g.in_c,
                                        sizeof(T) * static_cast<size_t>(g.in_c));
                        }
                        dst += g.in_c;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add column rows back into an image tensor.
template <typename T>
void col2im(const ConvGeom& g, const std::vector<T>& cols, Tensor<T>& dx) {
    const int64_t n = dx.dim(0), oh = g.out_h(), ow = g.out_w(), k = g.patch_len();
    dx.zero();
    T* xp = dx.data();
    const int64_t row_stride = g.in_w * g.in_c;
    const int64_t img_stride = g.in_h * row_stride;
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < n; ++b) {
        for (int64_t r = 0; r < oh; ++r) {
            for (int64_t c = 0; c < ow; ++c) {
                const T* src = cols.data() + ((b * oh + r) * ow + c) * k;
                for (int64_t i = 0; i < g.kh; ++i) {
                    const int64_t ih = r * g.stride - g.pad + i;
                    if (ih < 0 || ih >= g.in_h) {
                        src += g.kw * g.in_c;
                        continue;
                    }
                    for (int64_t j = 0; j < g.kw; ++j) {
                        const int64_t iw = c * g.stride - g.pad + j;
                        if (iw >= 0 && iw < g.in_w) {
                            T* dst = xp + b * img_stride + ih * row_stride + iw * g.in_c;
                            for (int64_t ch = 0; ch < g.in_c; ++ch) dst[ch] += src[ch];
                        }
                        src += g.in_c;
                    }
                }
            }
        }
    }
}

// y[n,oh,ow,out_c]; bias may be empty.
template <typename T>
void conv_forward(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                  Tensor<T>& y, std::vector<T>& scratch) {
    const int64_t n = x.dim(0), rows = n * g.out_h() * g.out_w(), k = g.patch_len();
    y = Tensor<T>({n, g.out_h(), g.out_w(), g.out_c});
    if (g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0) {
        gemm<T>(false, false, rows, g.out_c, k, T{1}, x.data(), k, w.data(), g.out_c, T{0},
                y.data(), g.out_c);
    } else {
        im2col(g, x, scratch);
        gemm<T>(false, false, rows, g.out_c, k, T{1}, scratch.data(), k, w.data(), g.out_c, T{0},
                y.data(), g.out_c);
    }
    if (!bias.empty()) {
        T* yp = y.data();
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < g.out_c; ++c) yp[r * g.out_c + c] += bias[c];
    }
}

// dw[k,out_c] += x ⋆ dy. Caller zeroes dw when accumulation is not wanted.
template <typename T>
void conv_backward_weight(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dw,
                          Tensor<T>& dbias, std::vector<T>& scratch) {
    const int64_t n = x.dim(0), rows = n * g.out_h() * g.out_w(), k = g.patch_len();
    const T* cols = nullptr;
    if (g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0) {
        cols = x.data();
    } else {
        im2col(g, x, scratch);
        cols = scratch.data();
    }
    gemm<T>(true, false, k, g.out_c, rows, T{1}, cols, k, dy.data(), g.out_c, T{1}, dw.data(),
            g.out_c);
    if (!dbias.empty()) {
        const T* dp = dy.data();
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < g.out_c; ++c) dbias[c] += dp[r * g.out_c + c];
    }
}

template <typename T>
void conv_backward_input(const ConvGeom& g, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>& dx,
                         std::vector<T>& scratch) {
    const int64_t n = dy.dim(0), rows = n * g.out_h() * g.out_w(), k = g.patch_len();
    dx = Tensor<T>({n, g.in_h, g.in_w, g.in_c});
    if (g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0) {
        gemm<T>(false, true, rows, k, g.out_c, T{1}, dy.data(), g.out_c, w.data(), g.out_c, T{0},
                dx.data(), k);
        return;
    }
    scratch.resize(static_cast<size_t>(rows * k));
    gemm<T>(false, true, rows, k, g.out_c, T{1}, dy.data(), g.out_c, w.data(), g.out_c, T{0},
            scratch.data(), k);
    col2im(g, scratch, dx);
}

// ---------------------------------------------------------------------------
// Transposed convolution, expressed through the adjoint convolution that maps
// the (larger) output grid back to the input grid. Weights live in that
// adjoint geometry: [kh*kw*out_c, in_c].
// ---------------------------------------------------------------------------

struct TransConvGeom {
    int64_t in_h = 0, in_w = 0, in_c = 0;
    int64_t out_c = 0;
    int64_t kh = 4, kw = 4;
    int64_t stride = 2;
    int64_t pad = 1;

    int64_t out_h() const { return (in_h - 1) * stride - 2 * pad + kh; }
    int64_t out_w() const { return (in_w - 1) * stride - 2 * pad + kw; }

    ConvGeom adjoint() const {
        ConvGeom g;
        g.in_h = out_h();
        g.in_w = out_w();
        g.in_c = out_c;
        g.out_c = in_c;
        g.kh = kh;
        g.kw = kw;
        g.stride = stride;
        g.pad = pad;
        return g;
    }
};

template <typename T>
void transposed_conv_forward(const TransConvGeom& t, const Tensor<T>& x, const Tensor<T>& w,
                             const Tensor<T>& bias, Tensor<T>& y, std::vector<T>& scratch) {
    conv_backward_input(t.adjoint(), w, x, y, scratch);
    if (!bias.empty()) {
        const int64_t rows = y.size() / t.out_c;
        T* yp = y.data();
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < t.out_c; ++c) yp[r * t.out_c + c] += bias[c];
    }
}

template <typename T>
void transposed_conv_backward_input(const TransConvGeom& t, const Tensor<T>& w, const Tensor<T>& dy,
                                    Tensor<T>& dx, std::vector<T>& scratch) {
    Tensor<T> empty_bias;
    conv_forward(t.adjoint(), dy, w, empty_bias, dx, scratch);
}

template <typename T>
void transposed_conv_backward_weight(const TransConvGeom& t, const Tensor<T>& x,
                                     const Tensor<T>& dy, Tensor<T>& dw, Tensor<T>& dbias,
                                     std::vector<T>& scratch) {
    // In the adjoint view the "input" is dy (output grid) and the gradient
    // flowing out of the conv is x.
    Tensor<T> dbias_unused;
    conv_backward_weight(t.adjoint(), dy, x, dw, dbias_unused, scratch);
    if (!dbias.empty()) {
        const int64_t rows = dy.size() / t.out_c;
        const T* dp = dy.data();
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < t.out_c; ++c) dbias[c] += dp[r * t.out_c + c];
    }
}

// ---------------------------------------------------------------------------
// Pooling (square window, stride == window).
// ---------------------------------------------------------------------------

template <typename T>
void maxpool_forward(const Tensor<T>& x, int64_t win, Tensor<T>& y, std::vector<int32_t>& argmax) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t oh = h / win, ow = w / win;
    y = Tensor<T>({n, oh, ow, c});
    argmax.assign(static_cast<size_t>(y.size()), 0);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < oh; ++r)
            for (int64_t cc = 0; cc < ow; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) {
                    T best = x.at(b, r * win, cc * win, ch);
                    int32_t best_idx = 0;
                    for (int64_t i = 0; i < win; ++i)
                        for (int64_t j = 0; j < win; ++j) {
                            const T v = x.at(b, r * win + i, cc * win + j, ch);
                            if (v > best) {
                                best = v;
                                best_idx = static_cast<int32_t>(i * win + j);
                            }
                        }
                    y.at(b, r, cc, ch) = best;
                    argmax[static_cast<size_t>(((b * oh + r) * ow + cc) * c + ch)] = best_idx;
                }
}

template <typename T>
void maxpool_backward(const Tensor<T>& dy, int64_t win, const std::vector<int32_t>& argmax,
                      Tensor<T>& dx, int64_t in_h, int64_t in_w) {
    const int64_t n = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2), c = dy.dim(3);
    dx = Tensor<T>({n, in_h, in_w, c});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < oh; ++r)
            for (int64_t cc = 0; cc < ow; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const int32_t idx =
                        argmax[static_cast<size_t>(((b * oh + r) * ow + cc) * c + ch)];
                    dx.at(b, r * win + idx / win, cc * win + idx % win, ch) += dy.at(b, r, cc, ch);
                }
}

template <typename T>
void avgpool_forward(const Tensor<T>& x, int64_t win, Tensor<T>& y) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t oh = h / win, ow = w / win;
    const T inv = T{1} / static_cast<T>(win * win);
    y = Tensor<T>({n, oh, ow, c});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < oh; ++r)
            for (int64_t cc = 0; cc < ow; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) {
                    T acc{0};
                    for (int64_t i = 0; i < win; ++i)
                        for (int64_t j = 0; j < win; ++j)
                            acc += x.at(b, r * win + i, cc * win + j, ch);
                    y.at(b, r, cc, ch) = acc * inv;
                }
}

template <typename T>
void avgpool_backward(const Tensor<T>& dy, int64_t win, Tensor<T>& dx, int64_t in_h, int64_t in_w) {
    const int64_t n = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2), c = dy.dim(3);
    const T inv = T{1} / static_cast<T>(win * win);
    dx = Tensor<T>({n, in_h, in_w, c});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < oh; ++r)
            for (int64_t cc = 0; cc < ow; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const T g = dy.at(b, r, cc, ch) * inv;
                    for (int64_t i = 0; i < win; ++i)
                        for (int64_t j = 0; j < win; ++j)
                            dx.at(b, r * win + i, cc * win + j, ch) += g;
                }
}

// ---------------------------------------------------------------------------
// 2x upsampling.
// ---------------------------------------------------------------------------

template <typename T>
void upsample_nearest_forward(const Tensor<T>& x, Tensor<T>& y) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    y = Tensor<T>({n, h * 2, w * 2, c});
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < h * 2; ++r)
            for (int64_t cc = 0; cc < w * 2; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) y.at(b, r, cc, ch) = x.at(b, r / 2, cc / 2, ch);
}

template <typename T>
void upsample_nearest_backward(const Tensor<T>& dy, Tensor<T>& dx) {
    const int64_t n = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2), c = dy.dim(3);
    dx = Tensor<T>({n, oh / 2, ow / 2, c});
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < oh; ++r)
            for (int64_t cc = 0; cc < ow; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) dx.at(b, r / 2, cc / 2, ch) += dy.at(b, r, cc, ch);
}

// Bilinear with half-pixel centers: src = (dst + 0.5)/2 - 0.5, edges clamped.
inline void bilinear2x_coeffs(int64_t dst, int64_t src_size, int64_t& i0, int64_t& i1, double& w1) {
    const double s = (static_cast<double>(dst) + 0.5) / 2.0 - 0.5;
    double f = std::floor(s);
    w1 = s - f;
    i0 = static_cast<int64_t>(f);
    i1 = i0 + 1;
    if (i0 < 0) i0 = 0;
    if (i1 < 0) i1 = 0;
    if (i0 >= src_size) i0 = src_size - 1;
    if (i1 >= src_size) i1 = src_size - 1;
}

template <typename T>
void upsample_bilinear_forward(const Tensor<T>& x, Tensor<T>& y) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    y = Tensor<T>({n, h * 2, w * 2, c});
    for (int64_t r = 0; r < h * 2; ++r) {
        int64_t r0, r1;
        double fr;
        bilinear2x_coeffs(r, h, r0, r1, fr);
        for (int64_t cc = 0; cc < w * 2; ++cc) {
            int64_t c0, c1;
            double fc;
            bilinear2x_coeffs(cc, w, c0, c1, fc);
            for (int64_t b = 0; b < n; ++b)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const double v = (1 - fr) * ((1 - fc) * x.at(b, r0, c0, ch) +
                                                 fc * x.at(b, r0, c1, ch)) +
                                     fr * ((1 - fc) * x.at(b, r1, c0, ch) +
                                           fc * x.at(b, r1, c1, ch));
                    y.at(b, r, cc, ch) = static_cast<T>(v);
                }
        }
    }
}

template <typename T>
void upsample_bilinear_backward(const Tensor<T>& dy, Tensor<T>& dx) {
    const int64_t n = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2), c = dy.dim(3);
    const int64_t h = oh / 2, w = ow / 2;
    dx = Tensor<T>({n, h, w, c});
    for (int64_t r = 0; r < oh; ++r) {
        int64_t r0, r1;
        double fr;
        bilinear2x_coeffs(r, h, r0, r1, fr);
        for (int64_t cc = 0; cc < ow; ++cc) {
            int64_t c0, c1;
            double fc;
            bilinear2x_coeffs(cc, w, c0, c1, fc);
            for (int64_t b = 0; b < n; ++b)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const double g = dy.at(b, r, cc, ch);
                    dx.at(b, r0, c0, ch) += static_cast<T>((1 - fr) * (1 - fc) * g);
                    dx.at(b, r0, c1, ch) += static_cast<T>((1 - fr) * fc * g);
                    dx.at(b, r1, c0, ch) += static_cast<T>(fr * (1 - fc) * g);
                    dx.at(b, r1, c1, ch) += static_cast<T>(fr * fc * g);
                }
        }
    }
}

// ---------------------------------------------------------------------------
// Channel concat of two producers.
// ---------------------------------------------------------------------------

template <typename T>
void concat_forward(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& y) {
    const int64_t n = a.dim(0), h = a.dim(1), w = a.dim(2);
    const int64_t ca = a.dim(3), cb = b.dim(3);
    y = Tensor<T>({n, h, w, ca + cb});
    const int64_t pos = n * h * w;
    for (int64_t p = 0; p < pos; ++p) {
        std::memcpy(y.data() + p * (ca + cb), a.data() + p * ca, sizeof(T) * static_cast<size_t>(ca));
        std::memcpy(y.data() + p * (ca + cb) + ca, b.data() + p * cb,
                    sizeof(T) * static_cast<size_t>(cb));
    }
}

template <typename T>
void concat_backward(const Tensor<T>& dy, int64_t ca, int64_t cb, Tensor<T>& da, Tensor<T>& db) {
    const int64_t n = dy.dim(0), h = dy.dim(1), w = dy.dim(2);
    da = Tensor<T>({n, h, w, ca});
    db = Tensor<T>({n, h, w, cb});
    const int64_t pos = n * h * w;
    for (int64_t p = 0; p < pos; ++p) {
        std::memcpy(da.data() + p * ca, dy.data() + p * (ca + cb), sizeof(T) * static_cast<size_t>(ca));
        std::memcpy(db.data() + p * cb, dy.data() + p * (ca + cb) + ca,
                    sizeof(T) * static_cast<size_t>(cb));
    }
}

// ---------------------------------------------------------------------------
// Global average pooling: [n,h,w,c] -> [n,c].
// ---------------------------------------------------------------------------

template <typename T>
void gap_forward(const Tensor<T>& x, Tensor<T>& y) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    y = Tensor<T>({n, c});
    const T inv = T{1} / static_cast<T>(h * w);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < h; ++r)
            for (int64_t cc = 0; cc < w; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) y.at(b, ch) += x.at(b, r, cc, ch) * inv;
}

template <typename T>
void gap_backward(const Tensor<T>& dy, int64_t h, int64_t w, Tensor<T>& dx) {
    const int64_t n = dy.dim(0), c = dy.dim(1);
    dx = Tensor<T>({n, h, w, c});
    const T inv = T{1} / static_cast<T>(h * w);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t r = 0; r < h; ++r)
            for (int64_t cc = 0; cc < w; ++cc)
                for (int64_t ch = 0; ch < c; ++ch) dx.at(b, r, cc, ch) = dy.at(b, ch) * inv;
}

// ---------------------------------------------------------------------------
// Activations. Backward variants take the *forward output*.
// ---------------------------------------------------------------------------

inline constexpr double kLeakySlope = 0.2;

template <typename T>
void leaky_relu_forward(Tensor<T>& x) {
    const int64_t n = x.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        if (x[i] < T{0}) x[i] *= static_cast<T>(kLeakySlope);
}

template <typename T>
void leaky_relu_backward(const Tensor<T>& y, Tensor<T>& dy) {
    const int64_t n = y.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        if (y[i] < T{0}) dy[i] *= static_cast<T>(kLeakySlope);
}

template <typename T>
void relu_forward(Tensor<T>& x) {
    for (int64_t i = 0; i < x.size(); ++i)
        if (x[i] < T{0}) x[i] = T{0};
}

template <typename T>
void relu_backward(const Tensor<T>& y, Tensor<T>& dy) {
    for (int64_t i = 0; i < y.size(); ++i)
        if (y[i] <= T{0}) dy[i] = T{0};
}

template <typename T>
void tanh_forward(Tensor<T>& x) {
    for (int64_t i = 0; i < x.size(); ++i) x[i] = std::tanh(x[i]);
}

template <typename T>
void tanh_backward(const Tensor<T>& y, Tensor<T>& dy) {
    for (int64_t i = 0; i < y.size(); ++i) dy[i] *= (T{1} - y[i] * y[i]);
}

// Softmax over the trailing dimension.
template <typename T>
void softmax_last_dim(const Tensor<T>& logits, Tensor<T>& probs) {
    const int64_t c = logits.dim(logits.rank() - 1);
    const int64_t rows = logits.size() / c;
    probs = Tensor<T>(logits.dims());
    for (int64_t r = 0; r < rows; ++r) {
        const T* lp = logits.data() + r * c;
        T* pp = probs.data() + r * c;
        T mx = lp[0];
        for (int64_t i = 1; i < c; ++i) mx = std::max(mx, lp[i]);
        T denom{0};
        for (int64_t i = 0; i < c; ++i) {
            pp[i] = std::exp(lp[i] - mx);
            denom += pp[i];
        }
        for (int64_t i = 0; i < c; ++i) pp[i] /= denom;
    }
}

// ---------------------------------------------------------------------------
// Dropout with keep probability q; kept units are scaled by 1/q so the
// expected activation is unchanged. The mask derives from a counter hash of
// (seed, index), so it is independent of thread count.
// ---------------------------------------------------------------------------

template <typename T>
void dropout_forward(Tensor<T>& x, double keep, uint64_t seed, std::vector<uint8_t>& mask) {
    mask.assign(static_cast<size_t>(x.size()), 1);
    const T scale = static_cast<T>(1.0 / keep);
    const int64_t n = x.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        const double u =
            static_cast<double>(mix64(seed ^ static_cast<uint64_t>(i)) >> 11) * 0x1.0p-53;
        if (u < keep) {
            x[i] *= scale;
        } else {
            x[i] = T{0};
            mask[static_cast<size_t>(i)] = 0;
        }
    }
}

template <typename T>
void dropout_backward(const std::vector<uint8_t>& mask, double keep, Tensor<T>& dy) {
    const T scale = static_cast<T>(1.0 / keep);
    const int64_t n = dy.size();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        dy[i] = mask[static_cast<size_t>(i)] ? dy[i] * scale : T{0};
}

// ---------------------------------------------------------------------------
// Instance / batch normalization. Saved stats carry mean and inverse stddev;
// backward recomputes x-hat from the stored pre-normalization input.
// ---------------------------------------------------------------------------

inline constexpr double kNormEps = 1e-5;

struct NormStats {
    std::vector<double> mean;
    std::vector<double> inv_std;
};

// Instance norm: statistics per (sample, channel) over H*W.
template <typename T>
void instance_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           Tensor<T>& y, NormStats& stats) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t hw = h * w;
    y = Tensor<T>(x.dims());
    stats.mean.assign(static_cast<size_t>(n * c), 0.0);
    stats.inv_std.assign(static_cast<size_t>(n * c), 0.0);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            double m = 0, v = 0;
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) m += x.at(b, r, cc, ch);
            m /= static_cast<double>(hw);
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) {
                    const double d = x.at(b, r, cc, ch) - m;
                    v += d * d;
                }
            v /= static_cast<double>(hw);
            const double is = 1.0 / std::sqrt(v + kNormEps);
            stats.mean[static_cast<size_t>(b * c + ch)] = m;
            stats.inv_std[static_cast<size_t>(b * c + ch)] = is;
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc)
                    y.at(b, r, cc, ch) = static_cast<T>(
                        (x.at(b, r, cc, ch) - m) * is * static_cast<double>(gamma[ch]) +
                        static_cast<double>(beta[ch]));
        }
}

template <typename T>
void instance_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const NormStats& stats,
                            const Tensor<T>& dy, Tensor<T>& dx, Tensor<T>& dgamma,
                            Tensor<T>& dbeta) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t hw = h * w;
    dx = Tensor<T>(x.dims());
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const double m = stats.mean[static_cast<size_t>(b * c + ch)];
            const double is = stats.inv_std[static_cast<size_t>(b * c + ch)];
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) {
                    const double xhat = (x.at(b, r, cc, ch) - m) * is;
                    const double g = dy.at(b, r, cc, ch);
                    sum_dy += g;
                    sum_dy_xhat += g * xhat;
                }
            dgamma[ch] += static_cast<T>(sum_dy_xhat);
            dbeta[ch] += static_cast<T>(sum_dy);
            const double ga = gamma[ch];
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) {
                    const double xhat = (x.at(b, r, cc, ch) - m) * is;
                    const double g = dy.at(b, r, cc, ch);
                    dx.at(b, r, cc, ch) = static_cast<T>(
                        ga * is *
                        (g - sum_dy / static_cast<double>(hw) -
                         xhat * sum_dy_xhat / static_cast<double>(hw)));
                }
        }
}

// Batch norm: statistics per channel over (N, H, W). Training mode only;
// evaluation uses running statistics folded by the caller.
template <typename T>
void batch_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        Tensor<T>& y, NormStats& stats) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t cnt = n * h * w;
    y = Tensor<T>(x.dims());
    stats.mean.assign(static_cast<size_t>(c), 0.0);
    stats.inv_std.assign(static_cast<size_t>(c), 0.0);
    for (int64_t ch = 0; ch < c; ++ch) {
        double m = 0, v = 0;
        for (int64_t b = 0; b < n; ++b)
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) m += x.at(b, r, cc, ch);
        m /= static_cast<double>(cnt);
        for (int64_t b = 0; b < n; ++b)
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) {
                    const double d = x.at(b, r, cc, ch) - m;
                    v += d * d;
                }
        v /= static_cast<double>(cnt);
        const double is = 1.0 / std::sqrt(v + kNormEps);
        stats.mean[static_cast<size_t>(ch)] = m;
        stats.inv_std[static_cast<size_t>(ch)] = is;
        for (int64_t b = 0; b < n; ++b)
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc)
                    y.at(b, r, cc, ch) = static_cast<T>(
                        (x.at(b, r, cc, ch) - m) * is * static_cast<double>(gamma[ch]) +
                        static_cast<double>(beta[ch]));
    }
}

template <typename T>
void batch_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma, const NormStats& stats,
                         const Tensor<T>& dy, Tensor<T>& dx, Tensor<T>& dgamma, Tensor<T>& dbeta) {
    const int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int64_t cnt = n * h * w;
    dx = Tensor<T>(x.dims());
    for (int64_t ch = 0; ch < c; ++ch) {
        const double m = stats.mean[static_cast<size_t>(ch)];
        const double is = stats.inv_std[static_cast<size_t>(ch)];
        double sum_dy = 0, sum_dy_xhat = 0;
        for (int64_t b = 0; b < n; ++b)
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) {
                    const double xhat = (x.at(b, r, cc, ch) - m) * is;
                    const double g = dy.at(b, r, cc, ch);
                    sum_dy += g;
                    sum_dy_xhat += g * xhat;
                }
        dgamma[ch] += static_cast<T>(sum_dy_xhat);
        dbeta[ch] += static_cast<T>(sum_dy);
        const double ga = gamma[ch];
        for (int64_t b = 0; b < n; ++b)
            for (int64_t r = 0; r < h; ++r)
                for (int64_t cc = 0; cc < w; ++cc) {
                    const double xhat = (x.at(b, r, cc, ch) - m) * is;
                    const double g = dy.at(b, r, cc, ch);
                    dx.at(b, r, cc, ch) = static_cast<T>(
                        ga * is *
                        (g - sum_dy / static_cast<double>(cnt) -
                         xhat * sum_dy_xhat / static_cast<double>(cnt)));
                }
    }
}

// ---------------------------------------------------------------------------
// Weight normalization: w_i = (g_i / ||v_i||) * v_i per output unit. Kernels
// are [K, M] with one column per output unit.
// ---------------------------------------------------------------------------

template <typename T>
void weight_norm_effective(const Tensor<T>& v, const Tensor<T>& g, Tensor<T>& w) {
    const int64_t k = v.dim(0), m = v.dim(1);
    w = Tensor<T>(v.dims());
    for (int64_t i = 0; i < m; ++i) {
        double norm2 = 0;
        for (int64_t r = 0; r < k; ++r) norm2 += static_cast<double>(v.at(r, i)) * v.at(r, i);
        const double scale = static_cast<double>(g[i]) / std::sqrt(norm2);
        for (int64_t r = 0; r < k; ++r) w.at(r, i) = static_cast<T>(v.at(r, i) * scale);
    }
}

template <typename T>
void weight_norm_backward(const Tensor<T>& v, const Tensor<T>& g, const Tensor<T>& dw,
                          Tensor<T>& dv, Tensor<T>& dg) {
    const int64_t k = v.dim(0), m = v.dim(1);
    for (int64_t i = 0; i < m; ++i) {
        double norm2 = 0, dot = 0;
        for (int64_t r = 0; r < k; ++r) {
            norm2 += static_cast<double>(v.at(r, i)) * v.at(r, i);
            dot += static_cast<double>(dw.at(r, i)) * v.at(r, i);
        }
        const double norm = std::sqrt(norm2);
        dg[i] += static_cast<T>(dot / norm);
        const double s = static_cast<double>(g[i]) / norm;
        const double proj = dot / norm2;
        for (int64_t r = 0; r < k; ++r)
            dv.at(r, i) += static_cast<T>(s * (dw.at(r, i) - proj * v.at(r, i)));
    }
}

// Single-window pooling helper (row-major square window).
template <typename T>
T pool_window(const std::vector<T>& window, bool max_mode) {
    if (max_mode) {
        T best = window[0];
        for (const T& v : window) best = std::max(best, v);
        return best;
    }
    T acc{0};
    for (const T& v : window) acc += v;
    return acc / static_cast<T>(window.size());
}

}  // namespace vesselgan::ops

#endif
