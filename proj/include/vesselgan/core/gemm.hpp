#ifndef VESSELGAN_CORE_GEMM_HPP
#define VESSELGAN_CORE_GEMM_HPP

#include <cstdint>

#ifdef VESSELGAN_USE_CBLAS
#include <cblas.h>
#endif

namespace vesselgan {

// C[m x n] (+)= A[m x k] * B[k x n], all row-major. transa/transb flip the
// logical orientation of A/B (dims m,k,n refer to the post-transpose shapes).
template <typename T>
inline void gemm(bool transa, bool transb, int64_t m, int64_t n, int64_t k, T alpha, const T* a,
                 int64_t lda, const T* b, int64_t ldb, T beta, T* c, int64_t ldc) {
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            T acc{0};
            for (int64_t p = 0; p < k; ++p) {
                const T av = transa ? a[p * lda + i] : a[i * lda + p];
                const T bv = transb ? b[j * ldb + p] : b[p * ldb + j];
                acc += av * bv;
            }
            c[i * ldc + j] = alpha * acc + beta * c[i * ldc + j];
        }
    }
}

#ifdef VESSELGAN_USE_CBLAS
template <>
inline void gemm<float>(bool transa, bool transb, int64_t m, int64_t n, int64_t k, float alpha,
                        const float* a, int64_t lda, const float* b, int64_t ldb, float beta,
                        float* c, int64_t ldc) {
    cblas_sgemm(CblasRowMajor, transa ? CblasTrans : CblasNoTrans,
                transb ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb),
                beta, c, static_cast<int>(ldc));
}

template <>
inline void gemm<double>(bool transa, bool transb, int64_t m, int64_t n, int64_t k, double alpha,
                         const double* a, int64_t lda, const double* b, int64_t ldb, double beta,
                         double* c, int64_t ldc) {
    cblas_dgemm(CblasRowMajor, transa ? CblasTrans : CblasNoTrans,
                transb ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb),
                beta, c, static_cast<int>(ldc));
}
#endif

}  // namespace vesselgan

#endif
