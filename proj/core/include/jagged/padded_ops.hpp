#pragma once

#include <span>

#include "jagged/linalg.hpp"
#include "jagged/tensor.hpp"

namespace jagged::padded {

// Padded-execution counterparts of the jagged operators: every sample is
// processed at full padded width, the way a native framework implementation
// would run on padded tensors. Valid regions match the jagged results; the
// extra work on pad positions is the cost being benchmarked against.
//
// Matmul-style ops expect zero padding. Softmax ops expect -infinity padding
// (fully padded rows/columns come out as zeros).

template <typename T>
DenseTensor<T> jagged_dense_bmm(const DenseTensor<T>& x, const DenseTensor<T>& w,
                                const KernelOptions& opts = {});

template <typename T>
DenseTensor<T> jagged_jagged_bmm(const DenseTensor<T>& x, const DenseTensor<T>& y,
                                 const KernelOptions& opts = {});

template <typename T>
DenseTensor<T> jagged_softmax(const DenseTensor<T>& x, const KernelOptions& opts = {});

template <typename T>
DenseTensor<T> jagged_jagged_bmm_jagged_out(const DenseTensor<T>& q, const DenseTensor<T>& k,
                                            const KernelOptions& opts = {});

template <typename T>
DenseTensor<T> array_jagged_bmm_jagged_out(const DenseTensor<T>& a, const DenseTensor<T>& v,
                                           const KernelOptions& opts = {});

template <typename T>
DenseTensor<T> jagged2_softmax(const DenseTensor<T>& s, const KernelOptions& opts = {});

template <typename T>
DenseTensor<T> jagged_mlp(const DenseTensor<T>& x, std::span<const MlpLayer<T>> layers,
                          const KernelOptions& opts = {});

}  // namespace jagged::padded
