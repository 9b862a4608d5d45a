#include "mmccd/kernels/kernels.hpp"
#include "mmccd/kernels/scalar_ref.hpp"

namespace mmccd::kernels {
namespace {

using namespace ref;

const Ops kScalarOps = {
    "scalar",
    &axpby<float>,
    &axpy<float>,
    &scale<float>,
    &vadd<float>,
    &vmul<float>,
    &select<float>,
    &sq_diff<float>,
    &abs_diff<float>,
    &silu<float>,
    &silu_grad<float>,
    &sum<float>,
    &sum_sq<float>,
    &sq_diff_sum<float>,
    &gemm_nn<float>,
    &adam_step<float>,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace mmccd::kernels
