#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jagged/scratch.hpp"
#include "jagged/tensor.hpp"

namespace jagged {

/// Shared knobs for the segment-blocked kernels. `block` is the tile edge for
/// blocked row/column loops; results are block-size independent because every
/// output element is reduced over ascending input index regardless of tiling.
/// Per-element accumulation happens in binary64 even for float tensors.
struct KernelOptions {
  int64_t block = 64;
  int threads = 1;
  ScratchMeter* meter = nullptr;
};

// ---------------------------------------------------------------------------
// Forward operators (Table-1 shape signatures)
// ---------------------------------------------------------------------------

/// [sum_B, D] x [B, D, T] -> [sum_B, T]; per sample i, O_i = X_i * W_i.
template <typename T>
JaggedTensor<T> jagged_dense_bmm(const JaggedTensor<T>& x, const DenseTensor<T>& w,
                                 const KernelOptions& opts = {});

/// [sum_B, D] x [sum_B, T] -> [B, D, T]; per sample i, Z_i = X_i^T * Y_i.
template <typename T>
DenseTensor<T> jagged_jagged_bmm(const JaggedTensor<T>& x, const JaggedTensor<T>& y,
                                 const KernelOptions& opts = {});

/// Softmax over each sample's segment rows, per column, max-subtracted.
template <typename T>
JaggedTensor<T> jagged_softmax(const JaggedTensor<T>& x, const KernelOptions& opts = {});

/// [sum_B, D] x [sum_B, D] -> per-sample Bi x Bi score blocks; S_i = Q_i * K_i^T.
template <typename T>
Jagged2Tensor<T> jagged_jagged_bmm_jagged_out(const JaggedTensor<T>& q,
                                              const JaggedTensor<T>& k,
                                              const KernelOptions& opts = {});

/// Per-sample Bi x Bi blocks times [sum_B, D] -> [sum_B, D]; O_i = A_i * V_i.
template <typename T>
JaggedTensor<T> array_jagged_bmm_jagged_out(const Jagged2Tensor<T>& a,
                                            const JaggedTensor<T>& v,
                                            const KernelOptions& opts = {});

/// Row-wise softmax inside each Bi x Bi block (normalizes over the key axis).
template <typename T>
Jagged2Tensor<T> jagged2_softmax(const Jagged2Tensor<T>& s, const KernelOptions& opts = {});

enum class Activation { none, relu };

template <typename T>
struct MlpLayer {
  DenseTensor<T> weights;  // [D_in, D_out], shared across samples
  std::vector<T> bias;     // D_out
  Activation activation = Activation::none;
};

/// Row-wise affine + activation chain applied to every value row.
template <typename T>
JaggedTensor<T> jagged_mlp(const JaggedTensor<T>& x, std::span<const MlpLayer<T>> layers,
                           const KernelOptions& opts = {});

// ---------------------------------------------------------------------------
// Vector-Jacobian products. Gradients share the layout of the corresponding
// input exactly (jagged gradients carry the input's offsets).
// ---------------------------------------------------------------------------

template <typename T>
struct JaggedDenseBmmGrads {
  JaggedTensor<T> dx;
  DenseTensor<T> dw;
};

template <typename T>
struct JaggedJaggedBmmGrads {
  JaggedTensor<T> dx;
  JaggedTensor<T> dy;
};

template <typename T>
struct BmmJaggedOutGrads {
  JaggedTensor<T> dq;
  JaggedTensor<T> dk;
};

template <typename T>
struct ArrayJaggedBmmGrads {
  Jagged2Tensor<T> da;
  JaggedTensor<T> dv;
};

template <typename T>
struct MlpLayerGrads {
  DenseTensor<T> dweights;
  std::vector<T> dbias;
};

template <typename T>
struct JaggedMlpGrads {
  JaggedTensor<T> dx;
  std::vector<MlpLayerGrads<T>> dlayers;
};

/// dX_i = dO_i * W_i^T, dW_i = X_i^T * dO_i.
template <typename T>
JaggedDenseBmmGrads<T> jagged_dense_bmm_vjp(const JaggedTensor<T>& x, const DenseTensor<T>& w,
                                            const JaggedTensor<T>& grad_out,
                                            const KernelOptions& opts = {});

/// dX_i = Y_i * dZ_i^T, dY_i = X_i * dZ_i.
template <typename T>
JaggedJaggedBmmGrads<T> jagged_jagged_bmm_vjp(const JaggedTensor<T>& x,
                                              const JaggedTensor<T>& y,
                                              const DenseTensor<T>& grad_out,
                                              const KernelOptions& opts = {});

/// With p = softmax(x) per (sample, column): dx = p .* (dp - sum_rows(dp .* p)).
template <typename T>
JaggedTensor<T> jagged_softmax_vjp(const JaggedTensor<T>& x, const JaggedTensor<T>& grad_out,
                                   const KernelOptions& opts = {});

/// dQ_i = dS_i * K_i, dK_i = dS_i^T * Q_i.
template <typename T>
BmmJaggedOutGrads<T> jagged_jagged_bmm_jagged_out_vjp(const JaggedTensor<T>& q,
                                                      const JaggedTensor<T>& k,
                                                      const Jagged2Tensor<T>& grad_out,
                                                      const KernelOptions& opts = {});

/// dA_i = dO_i * V_i^T, dV_i = A_i^T * dO_i.
template <typename T>
ArrayJaggedBmmGrads<T> array_jagged_bmm_jagged_out_vjp(const Jagged2Tensor<T>& a,
                                                       const JaggedTensor<T>& v,
                                                       const JaggedTensor<T>& grad_out,
                                                       const KernelOptions& opts = {});

/// Same softmax backward formula applied per block row.
template <typename T>
Jagged2Tensor<T> jagged2_softmax_vjp(const Jagged2Tensor<T>& s, const Jagged2Tensor<T>& grad_out,
                                     const KernelOptions& opts = {});

/// Layer-wise backprop; relu gate is 1 where the pre-activation is > 0.
template <typename T>
JaggedMlpGrads<T> jagged_mlp_vjp(const JaggedTensor<T>& x, std::span<const MlpLayer<T>> layers,
                                 const JaggedTensor<T>& grad_out,
                                 const KernelOptions& opts = {});

}  // namespace jagged
