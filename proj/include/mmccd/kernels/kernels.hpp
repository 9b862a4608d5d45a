#pragma once

#include <cstddef>

// Runtime-dispatched float kernels. The scalar table is always available; the
// AVX2 table is installed when the CPU reports avx2+fma (overridable with
// MMCCD_KERNEL_BACKEND=scalar|avx2|auto or set_backend, used by the equivalence
// tests to compare both paths on identical inputs).
namespace mmccd::kernels {

struct Ops {
    const char* name;
    void (*axpby)(size_t n, float a, const float* x, float b, const float* y, float* out);
    void (*axpy)(size_t n, float a, const float* x, float* y);
    void (*scale)(size_t n, float a, const float* x, float* out);
    void (*vadd)(size_t n, const float* a, const float* b, float* out);
    void (*vmul)(size_t n, const float* a, const float* b, float* out);
    void (*select)(size_t n, const float* mask, const float* on, const float* off, float* out);
    void (*sq_diff)(size_t n, const float* a, const float* b, float* out);
    void (*abs_diff)(size_t n, const float* a, const float* b, float* out);
    void (*silu)(size_t n, const float* x, float* out);
    void (*silu_grad)(size_t n, const float* x, const float* gout, float* gin);
    double (*sum)(size_t n, const float* x);
    double (*sum_sq)(size_t n, const float* x);
    double (*sq_diff_sum)(size_t n, const float* a, const float* b);
    void (*gemm_nn)(int M, int N, int K, float alpha, const float* A, int lda,
                    const float* B, int ldb, float beta, float* C, int ldc);
    void (*adam_step)(size_t n, float* w, const float* g, float* m, float* v, float lr,
                      float beta1, float beta2, float eps, float c1, float c2);
};

enum class Backend { scalar, avx2 };

const Ops& ops();
Backend active_backend();
bool set_backend(Backend b);  // false if the target is not runnable on this CPU
bool avx2_available();

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when not compiled in

// General matmul with optional transposes; packs the transposed operand into a
// scratch buffer and runs the dispatched NN kernel.
void gemm(bool trans_a, bool trans_b, int M, int N, int K, float alpha, const float* A,
          int lda, const float* B, int ldb, float beta, float* C, int ldc);

}  // namespace mmccd::kernels
