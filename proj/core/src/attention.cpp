#include "jagged/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jagged/parallel.hpp"
#include "jagged/scratch.hpp"

namespace jagged {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename T>
void require_self_attention_inputs(const DenseTensor<T>& q, const DenseTensor<T>& k,
                                   const DenseTensor<T>& v, std::span<const int64_t> lengths,
                                   const char* op) {
  if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape())
    throw std::invalid_argument(std::string(op) + ": q, k, v must share a [B, L, D] shape");
  if (static_cast<int64_t>(lengths.size()) != q.shape()[0])
    throw std::invalid_argument(std::string(op) + ": lengths size mismatch");
  for (size_t i = 0; i < lengths.size(); ++i)
    if (lengths[i] < 0 || lengths[i] > q.shape()[1])
      throw std::invalid_argument(std::string(op) + ": sample " + std::to_string(i) +
                                  " length " + std::to_string(lengths[i]) +
                                  " out of bounds for L=" + std::to_string(q.shape()[1]));
}

template <typename T>
void require_jagged_attention_inputs(const JaggedTensor<T>& q, const JaggedTensor<T>& k,
                                     const JaggedTensor<T>& v, const char* op) {
  if (q.dim() != k.dim() || q.dim() != v.dim())
    throw std::invalid_argument(std::string(op) + ": dim mismatch");
  if (!q.same_offsets(k) || !q.same_offsets(v))
    throw std::invalid_argument(std::string(op) + ": q, k, v must share offsets");
}

double dot_rows(const auto* a, const auto* b, int64_t d) {
  double acc = 0.0;
  for (int64_t i = 0; i < d; ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

}  // namespace

template <typename T>
DenseTensor<T> transpose_per_sample(const DenseTensor<T>& x) {
  if (x.rank() != 3) throw std::invalid_argument("transpose_per_sample: rank-3 input required");
  const int64_t b = x.shape()[0], m = x.shape()[1], n = x.shape()[2];
  auto out = DenseTensor<T>::zeros({b, n, m});
  for (int64_t i = 0; i < b; ++i)
    for (int64_t r = 0; r < m; ++r)
      for (int64_t c = 0; c < n; ++c) out.at(i, c, r) = x.at(i, r, c);
  return out;
}

template <typename T>
DenseTensor<T> dense_attention(const DenseTensor<T>& q, const DenseTensor<T>& k,
                               const DenseTensor<T>& v, std::span<const int64_t> lengths,
                               const KernelOptions& opts) {
  require_self_attention_inputs(q, k, v, lengths, "dense_attention");
  const int64_t b = q.shape()[0], l = q.shape()[1], d = q.shape()[2];
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  auto out = DenseTensor<T>::zeros({b, l, d});

  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t n = lengths[i];
      // Full L x L score matrix, computed padded-width then masked. This is
      // the padded baseline the streaming variants are compared against.
      ScratchBuffer<double> scores(l * l, opts.meter);
      for (int64_t a = 0; a < l; ++a) {
        for (int64_t c = 0; c < l; ++c) {
          const double s = dot_rows(&q.at(i, a, 0), &k.at(i, c, 0), d) * inv_sqrt_d;
          scores[a * l + c] = (a < n && c < n) ? s : kNegInf;
        }
      }
      for (int64_t a = 0; a < l; ++a) {
        double m = kNegInf;
        for (int64_t c = 0; c < l; ++c) m = std::max(m, scores[a * l + c]);
        if (m == kNegInf) continue;  // fully masked row stays zero
        double sum = 0.0;
        for (int64_t c = 0; c < l; ++c) {
          const double p = std::exp(scores[a * l + c] - m);
          scores[a * l + c] = p;
          sum += p;
        }
        for (int64_t c = 0; c < l; ++c) scores[a * l + c] /= sum;
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t c = 0; c < l; ++c)
            acc += scores[a * l + c] * static_cast<double>(v.at(i, c, dd));
          out.at(i, a, dd) = static_cast<T>(acc);
        }
      }
    }
  });
  return out;
}

template <typename T>
DenseAttentionSaved<T> dense_flash_attention(const DenseTensor<T>& q, const DenseTensor<T>& k,
                                             const DenseTensor<T>& v,
                                             std::span<const int64_t> lengths, int64_t block_q,
                                             int64_t block_k, const KernelOptions& opts) {
  require_self_attention_inputs(q, k, v, lengths, "dense_flash_attention");
  if (block_q < 1 || block_k < 1)
    throw std::invalid_argument("dense_flash_attention: block sizes must be >= 1");
  const int64_t b = q.shape()[0], l = q.shape()[1], d = q.shape()[2];
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  auto out = DenseTensor<T>::zeros({b, l, d});
  std::vector<T> lse(static_cast<size_t>(b * l), static_cast<T>(kNegInf));

  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t n = lengths[i];
      ScratchBuffer<double> score_row(std::min(block_k, l), opts.meter);
      ScratchBuffer<double> acc(d, opts.meter);
      for (int64_t a0 = 0; a0 < l; a0 += block_q) {
        const int64_t a1 = std::min(a0 + block_q, l);
        for (int64_t a = a0; a < a1; ++a) {
          double m = kNegInf, sum = 0.0;
          for (int64_t dd = 0; dd < d; ++dd) acc[dd] = 0.0;
          for (int64_t c0 = 0; c0 < l; c0 += block_k) {
            const int64_t c1 = std::min(c0 + block_k, l);
            double block_max = kNegInf;
            for (int64_t c = c0; c < c1; ++c) {
              const double s = dot_rows(&q.at(i, a, 0), &k.at(i, c, 0), d) * inv_sqrt_d;
              score_row[c - c0] = (a < n && c < n) ? s : kNegInf;
              block_max = std::max(block_max, score_row[c - c0]);
            }
            const double m_new = std::max(m, block_max);
            if (m_new == kNegInf) continue;  // nothing valid seen yet
            const double rescale = (m == kNegInf) ? 0.0 : std::exp(m - m_new);
            sum *= rescale;
            for (int64_t dd = 0; dd < d; ++dd) acc[dd] *= rescale;
            for (int64_t c = c0; c < c1; ++c) {
              if (score_row[c - c0] == kNegInf) continue;
              const double p = std::exp(score_row[c - c0] - m_new);
              sum += p;
              for (int64_t dd = 0; dd < d; ++dd)
                acc[dd] += p * static_cast<double>(v.at(i, c, dd));
            }
            m = m_new;
          }
          if (sum > 0.0) {
            for (int64_t dd = 0; dd < d; ++dd) out.at(i, a, dd) = static_cast<T>(acc[dd] / sum);
            lse[i * l + a] = static_cast<T>(m + std::log(sum));
          }
        }
      }
    }
  });
  return {std::move(out), std::move(lse), block_q, block_k};
}

template <typename T>
JaggedTensor<T> jagged_attention(const JaggedTensor<T>& q, const JaggedTensor<T>& k,
                                 const JaggedTensor<T>& v, const KernelOptions& opts) {
  require_jagged_attention_inputs(q, k, v, "jagged_attention");
  const T inv_sqrt_d = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.dim())));
  const Jagged2Tensor<T> s = scale(jagged_jagged_bmm_jagged_out(q, k, opts), inv_sqrt_d);
  const Jagged2Tensor<T> p = jagged2_softmax(s, opts);
  return array_jagged_bmm_jagged_out(p, v, opts);
}

template <typename T>
JaggedAttentionSaved<T> jagged_flash_attention_forward(const JaggedTensor<T>& q,
                                                       const JaggedTensor<T>& k,
                                                       const JaggedTensor<T>& v, int64_t block_q,
                                                       int64_t block_k,
                                                       const KernelOptions& opts) {
  require_jagged_attention_inputs(q, k, v, "jagged_flash_attention_forward");
  if (block_q < 1 || block_k < 1)
    throw std::invalid_argument("jagged_flash_attention_forward: block sizes must be >= 1");
  const int64_t b = q.batch(), d = q.dim();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<T> out(q.values().size());
  std::vector<T> lse(static_cast<size_t>(q.total_rows()), static_cast<T>(kNegInf));

  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = q.offset(i), n = q.length(i);
      if (n == 0) continue;
      ScratchBuffer<double> score_row(std::min(block_k, n), opts.meter);
      ScratchBuffer<double> acc(d, opts.meter);
      for (int64_t a0 = 0; a0 < n; a0 += block_q) {
        const int64_t a1 = std::min(a0 + block_q, n);
        for (int64_t a = a0; a < a1; ++a) {
          const T* qrow = q.row(begin + a);
          double m = kNegInf, sum = 0.0;
          for (int64_t dd = 0; dd < d; ++dd) acc[dd] = 0.0;
          for (int64_t c0 = 0; c0 < n; c0 += block_k) {
            const int64_t c1 = std::min(c0 + block_k, n);
            double block_max = kNegInf;
            for (int64_t c = c0; c < c1; ++c) {
              score_row[c - c0] = dot_rows(qrow, k.row(begin + c), d) * inv_sqrt_d;
              block_max = std::max(block_max, score_row[c - c0]);
            }
            const double m_new = std::max(m, block_max);
            const double rescale = (m == kNegInf) ? 0.0 : std::exp(m - m_new);
            sum *= rescale;
            for (int64_t dd = 0; dd < d; ++dd) acc[dd] *= rescale;
            for (int64_t c = c0; c < c1; ++c) {
              const double p = std::exp(score_row[c - c0] - m_new);
              sum += p;
              const T* vrow = v.row(begin + c);
              for (int64_t dd = 0; dd < d; ++dd) acc[dd] += p * static_cast<double>(vrow[dd]);
            }
            m = m_new;
          }
          T* orow = out.data() + (begin + a) * d;
          for (int64_t dd = 0; dd < d; ++dd) orow[dd] = static_cast<T>(acc[dd] / sum);
          lse[begin + a] = static_cast<T>(m + std::log(sum));
        }
      }
    }
  });
  return {JaggedTensor<T>(q.offsets(), std::move(out), d), std::move(lse), block_q, block_k};
}

template <typename T>
AttentionGrads<T> jagged_flash_attention_backward(const JaggedTensor<T>& q,
                                                  const JaggedTensor<T>& k,
                                                  const JaggedTensor<T>& v,
                                                  const JaggedTensor<T>& grad_out,
                                                  const JaggedAttentionSaved<T>& saved,
                                                  const KernelOptions& opts) {
  require_jagged_attention_inputs(q, k, v, "jagged_flash_attention_backward");
  if (!grad_out.same_offsets(q) || grad_out.dim() != q.dim())
    throw std::invalid_argument("jagged_flash_attention_backward: grad_out layout mismatch");
  if (!saved.output.same_offsets(q) || saved.output.dim() != q.dim() ||
      static_cast<int64_t>(saved.logsumexp.size()) != q.total_rows() || saved.block_q < 1 ||
      saved.block_k < 1)
    throw std::invalid_argument(
        "jagged_flash_attention_backward: saved state does not match inputs");
  const int64_t b = q.batch(), d = q.dim();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const int64_t block_k = saved.block_k;

  std::vector<T> dq(q.values().size()), dk(k.values().size()), dv(v.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = q.offset(i), n = q.length(i);
      if (n == 0) continue;
      ScratchBuffer<double> dq_row(d, opts.meter);
      // Query rows are processed sequentially within a segment so dK/dV
      // accumulation order is fixed; parallelism happens across segments.
      for (int64_t a = 0; a < n; ++a) {
        const T* qrow = q.row(begin + a);
        const T* grow = grad_out.row(begin + a);
        const T* orow = saved.output.row(begin + a);
        const double lse = static_cast<double>(saved.logsumexp[begin + a]);
        double delta = 0.0;
        for (int64_t dd = 0; dd < d; ++dd)
          delta += static_cast<double>(grow[dd]) * static_cast<double>(orow[dd]);
        for (int64_t dd = 0; dd < d; ++dd) dq_row[dd] = 0.0;
        for (int64_t c0 = 0; c0 < n; c0 += block_k) {
          const int64_t c1 = std::min(c0 + block_k, n);
          for (int64_t c = c0; c < c1; ++c) {
            const T* krow = k.row(begin + c);
            const T* vrow = v.row(begin + c);
            const double s = dot_rows(qrow, krow, d) * inv_sqrt_d;
            const double p = std::exp(s - lse);
            const double dp = dot_rows(grow, vrow, d);
            const double dsv = p * (dp - delta);
            T* dvrow = dv.data() + (begin + c) * d;
            T* dkrow = dk.data() + (begin + c) * d;
            for (int64_t dd = 0; dd < d; ++dd) {
              dvrow[dd] += static_cast<T>(p * static_cast<double>(grow[dd]));
              dq_row[dd] += dsv * static_cast<double>(krow[dd]) * inv_sqrt_d;
              dkrow[dd] += static_cast<T>(dsv * static_cast<double>(qrow[dd]) * inv_sqrt_d);
            }
          }
        }
        T* dqrow = dq.data() + (begin + a) * d;
        for (int64_t dd = 0; dd < d; ++dd) dqrow[dd] = static_cast<T>(dq_row[dd]);
      }
    }
  });
  return {JaggedTensor<T>(q.offsets(), std::move(dq), d),
          JaggedTensor<T>(k.offsets(), std::move(dk), d),
          JaggedTensor<T>(v.offsets(), std::move(dv), d)};
}

template <typename T>
DenseTensor<T> feature_interaction(const JaggedTensor<T>& k_feat, const JaggedTensor<T>& v_feat,
                                   const DenseTensor<T>& targets, const KernelOptions& opts) {
  if (!k_feat.same_offsets(v_feat) || k_feat.dim() != v_feat.dim())
    throw std::invalid_argument("feature_interaction: k_feat/v_feat layout mismatch");
  if (targets.rank() != 3 || targets.shape()[0] != k_feat.batch() ||
      targets.shape()[2] != k_feat.dim())
    throw std::invalid_argument("feature_interaction: targets must be [B, Tq, D]");
  const int64_t d = k_feat.dim();
  const T inv_sqrt_d = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

  // Scores: per sample, K_i (Bi x D) times targets_i^T (D x Tq) -> [sum_B, Tq].
  const DenseTensor<T> targets_t = transpose_per_sample(targets);
  const JaggedTensor<T> s = scale(jagged_dense_bmm(k_feat, targets_t, opts), inv_sqrt_d);
  // Weights over each sample's feature values, independently per target.
  const JaggedTensor<T> p = jagged_softmax(s, opts);
  // P_i^T (Tq x Bi) times V_i (Bi x D) -> [B, Tq, D]; empty segments give zeros.
  return jagged_jagged_bmm(p, v_feat, opts);
}

#define JAGGED_INSTANTIATE_ATTENTION(T)                                                        \
  template DenseTensor<T> transpose_per_sample(const DenseTensor<T>&);                         \
  template DenseTensor<T> dense_attention(const DenseTensor<T>&, const DenseTensor<T>&,        \
                                          const DenseTensor<T>&, std::span<const int64_t>,     \
                                          const KernelOptions&);                               \
  template DenseAttentionSaved<T> dense_flash_attention(                                       \
      const DenseTensor<T>&, const DenseTensor<T>&, const DenseTensor<T>&,                     \
      std::span<const int64_t>, int64_t, int64_t, const KernelOptions&);                       \
  template JaggedTensor<T> jagged_attention(const JaggedTensor<T>&, const JaggedTensor<T>&,    \
                                            const JaggedTensor<T>&, const KernelOptions&);     \
  template JaggedAttentionSaved<T> jagged_flash_attention_forward(                             \
      const JaggedTensor<T>&, const JaggedTensor<T>&, const JaggedTensor<T>&, int64_t,         \
      int64_t, const KernelOptions&);                                                          \
  template AttentionGrads<T> jagged_flash_attention_backward(                                  \
      const JaggedTensor<T>&, const JaggedTensor<T>&, const JaggedTensor<T>&,                  \
      const JaggedTensor<T>&, const JaggedAttentionSaved<T>&, const KernelOptions&);           \
  template DenseTensor<T> feature_interaction(const JaggedTensor<T>&, const JaggedTensor<T>&,  \
                                              const DenseTensor<T>&, const KernelOptions&);

JAGGED_INSTANTIATE_ATTENTION(float)
JAGGED_INSTANTIATE_ATTENTION(double)

#undef JAGGED_INSTANTIATE_ATTENTION

}  // namespace jagged
