#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jagged/linalg.hpp"
#include "jagged/tensor.hpp"

namespace jagged {

// Scores are always scaled by 1/sqrt(D). Empty segments produce zero output
// rows and a -infinity logsumexp sentinel rather than errors.

/// State retained by a flash forward pass: the output itself plus one
/// logsumexp per query row (log sum_k exp(score)), enough to recompute
/// softmax tiles in the backward pass without storing probabilities.
template <typename T>
struct DenseAttentionSaved {
  DenseTensor<T> output;
  std::vector<T> logsumexp;  // B * L entries, -inf past each sample's length
  int64_t block_q = 64;
  int64_t block_k = 64;
};

template <typename T>
struct JaggedAttentionSaved {
  JaggedTensor<T> output;
  std::vector<T> logsumexp;  // sum_B entries
  int64_t block_q = 64;
  int64_t block_k = 64;
};

template <typename T>
struct AttentionGrads {
  JaggedTensor<T> dq;
  JaggedTensor<T> dk;
  JaggedTensor<T> dv;
};

/// Reference baseline: materializes the full L x L score matrix per sample,
/// then row softmax, then PV. Rows at or past lengths[i] are zero.
template <typename T>
DenseTensor<T> dense_attention(const DenseTensor<T>& q, const DenseTensor<T>& k,
                               const DenseTensor<T>& v, std::span<const int64_t> lengths,
                               const KernelOptions& opts = {});

/// Streaming (online-softmax) attention over padded inputs. Mathematically
/// identical to dense_attention; never holds more than one block_k-wide score
/// row at a time. Running statistics per query row r over key blocks:
///   m' = max(m, rowmax(S_blk)); l' = l*exp(m - m') + sum(exp(S_blk - m'));
///   acc' = acc*exp(m - m') + exp(S_blk - m') * V_blk
/// with O = acc / l and logsumexp = m + log l at the end of the stream.
template <typename T>
DenseAttentionSaved<T> dense_flash_attention(const DenseTensor<T>& q, const DenseTensor<T>& k,
                                             const DenseTensor<T>& v,
                                             std::span<const int64_t> lengths, int64_t block_q,
                                             int64_t block_k, const KernelOptions& opts = {});

/// Unfused jagged baseline: jagged_jagged_bmm_jagged_out -> scale ->
/// jagged2_softmax -> array_jagged_bmm_jagged_out. Materializes the full
/// jagged score tensor (sum of Bi^2 elements).
template <typename T>
JaggedTensor<T> jagged_attention(const JaggedTensor<T>& q, const JaggedTensor<T>& k,
                                 const JaggedTensor<T>& v, const KernelOptions& opts = {});

/// Fused jagged attention: the dense-flash streaming recurrence applied per
/// segment, never materializing a Bi x Bi buffer (peak score scratch is one
/// block_k-wide row).
template <typename T>
JaggedAttentionSaved<T> jagged_flash_attention_forward(const JaggedTensor<T>& q,
                                                       const JaggedTensor<T>& k,
                                                       const JaggedTensor<T>& v, int64_t block_q,
                                                       int64_t block_k,
                                                       const KernelOptions& opts = {});

/// Backward via blockwise recomputation from (q, k, saved logsumexp):
///   Delta_r = sum_d grad_out[r,d] * output[r,d]
///   P = exp(S/sqrt(D) - logsumexp);  dV += P^T dO;  dS = P .* (dP - Delta)
///   dQ += dS K / sqrt(D);            dK += dS^T Q / sqrt(D)
/// `saved` must come from a forward call on the same q, k, v.
template <typename T>
AttentionGrads<T> jagged_flash_attention_backward(const JaggedTensor<T>& q,
                                                  const JaggedTensor<T>& k,
                                                  const JaggedTensor<T>& v,
                                                  const JaggedTensor<T>& grad_out,
                                                  const JaggedAttentionSaved<T>& saved,
                                                  const KernelOptions& opts = {});

/// Cross-attention between per-sample variable-length feature embeddings
/// (keys/values) and a fixed number of target embeddings (queries):
///   S = k_feat x targets^T / sqrt(D)   (a [sum_B, Tq] jagged score tensor)
///   P = jagged_softmax(S)              (weights over feature values, per target)
///   O = P^T x v_feat                   ([B, Tq, D])
/// Samples with no feature values yield zero output rows.
template <typename T>
DenseTensor<T> feature_interaction(const JaggedTensor<T>& k_feat, const JaggedTensor<T>& v_feat,
                                   const DenseTensor<T>& targets,
                                   const KernelOptions& opts = {});

/// Per-sample transpose of a rank-3 tensor: [B, M, N] -> [B, N, M].
template <typename T>
DenseTensor<T> transpose_per_sample(const DenseTensor<T>& x);

}  // namespace jagged
