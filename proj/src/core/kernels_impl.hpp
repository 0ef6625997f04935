#pragma once

#include "mkv/kernels.hpp"

namespace mkv::kernels::detail {

extern const KernelTable kScalarTable;
void joint_moments_scalar(const double* u, const double* w, const double* v, std::size_t n,
                          std::size_t degree, JointMoments& m);

#if defined(MKV_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace mkv::kernels::detail
