#ifndef VESSELGAN_CORE_BLAS_TUNING_HPP
#define VESSELGAN_CORE_BLAS_TUNING_HPP

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#ifdef __linux__
#include <unistd.h>
#endif

#ifdef VESSELGAN_USE_CBLAS
extern "C" char* openblas_get_corename(void);
#endif

namespace vesselgan {

// OpenBLAS picks its kernel from CPUID at load time. Virtualized hosts that
// mask the CPU model make it fall back to a pre-AVX kernel, which costs about
// 5x on GEMM. The kernel cannot be switched after load, so when we detect the
// fallback on hardware that clearly supports better, we re-exec the process
// with OPENBLAS_CORETYPE pinned. Call first thing in main().
inline void ensure_fast_blas(int argc, char** argv) {
#if defined(VESSELGAN_USE_CBLAS) && defined(__linux__) && defined(__x86_64__)
    if (std::getenv("OPENBLAS_CORETYPE") || std::getenv("VESSELGAN_NO_BLAS_RETUNE")) return;
    const char* want = nullptr;
    if (__builtin_cpu_supports("avx512f"))
        want = "SKYLAKEX";
    else if (__builtin_cpu_supports("avx2"))
        want = "HASWELL";
    if (!want) return;
    const std::string core = openblas_get_corename();
    // Anything from the AVX era onward is fine as detected.
    static const char* kSlowCores[] = {"PRESCOTT", "CORE2", "PENRYN", "DUNNINGTON",
                                       "NEHALEM",  "ATOM",  "GENERIC"};
    bool slow = false;
    for (const char* s : kSlowCores) {
        if (core.size() == std::strlen(s)) {
            bool eq = true;
            for (size_t i = 0; i < core.size(); ++i)
                if (std::toupper(static_cast<unsigned char>(core[i])) != s[i]) eq = false;
            if (eq) slow = true;
        }
    }
    if (!slow) return;
    ::setenv("OPENBLAS_CORETYPE", want, 1);
    ::setenv("VESSELGAN_NO_BLAS_RETUNE", "1", 1);
    std::vector<char*> args(argv, argv + argc);
    args.push_back(nullptr);
    ::execv("/proc/self/exe", args.data());
    // exec failed; continue on the slow kernel.
#else
    (void)argc;
    (void)argv;
#endif
}

}  // namespace vesselgan

#endif
