#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "mmccd/kernels/kernels.hpp"

namespace mmccd::kernels {

#if !defined(MMCCD_WITH_AVX2)
const Ops* avx2_ops() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(MMCCD_WITH_AVX2) && (defined(__x86_64__) || defined(__i386__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct State {
    const Ops* active;
    Backend backend;
    State() {
        const char* env = std::getenv("MMCCD_KERNEL_BACKEND");
        bool want_scalar = env && std::strcmp(env, "scalar") == 0;
        if (!want_scalar && cpu_has_avx2() && avx2_ops()) {
            active = avx2_ops();
            backend = Backend::avx2;
        } else {
            active = &scalar_ops();
            backend = Backend::scalar;
        }
    }
};

State& state() {
    static State s;
    return s;
}

}  // namespace

const Ops& ops() { return *state().active; }
Backend active_backend() { return state().backend; }
bool avx2_available() { return cpu_has_avx2() && avx2_ops() != nullptr; }

bool set_backend(Backend b) {
    if (b == Backend::avx2) {
        if (!avx2_available()) return false;
        state().active = avx2_ops();
        state().backend = Backend::avx2;
        return true;
    }
    state().active = &scalar_ops();
    state().backend = Backend::scalar;
    return true;
}

void gemm(bool trans_a, bool trans_b, int M, int N, int K, float alpha, const float* A,
          int lda, const float* B, int ldb, float beta, float* C, int ldc) {
    if (M < 0 || N < 0 || K < 0) throw std::invalid_argument("gemm: negative dimension");
    thread_local std::vector<float> pack_a, pack_b;
    const float* a = A;
    const float* b = B;
    int la = lda, lb = ldb;
    if (trans_a) {
        pack_a.resize(static_cast<size_t>(M) * K);
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < M; ++i)
                pack_a[static_cast<size_t>(i) * K + k] = A[static_cast<size_t>(k) * lda + i];
        a = pack_a.data();
        la = K;
    }
    if (trans_b) {
        pack_b.resize(static_cast<size_t>(K) * N);
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < K; ++k)
                pack_b[static_cast<size_t>(k) * N + j] = B[static_cast<size_t>(j) * ldb + k];
        b = pack_b.data();
        lb = N;
    }
    ops().gemm_nn(M, N, K, alpha, a, la, b, lb, beta, C, ldc);
}

}  // namespace mmccd::kernels
