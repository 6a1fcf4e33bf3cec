#include "jagged/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jagged/parallel.hpp"

namespace jagged {

namespace {

template <typename T>
void require_matching_offsets(const JaggedTensor<T>& a, const JaggedTensor<T>& b,
                              const char* op) {
  if (a.batch() != b.batch())
    throw std::invalid_argument(std::string(op) + ": batch mismatch (" +
                                std::to_string(a.batch()) + " vs " + std::to_string(b.batch()) +
                                ")");
  for (int64_t i = 0; i < a.batch(); ++i)
    if (a.length(i) != b.length(i))
      throw std::invalid_argument(std::string(op) + ": offsets differ first at sample " +
                                  std::to_string(i));
}

int64_t tile_end(int64_t begin, int64_t block, int64_t end) {
  return std::min(begin + block, end);
}

}  // namespace

template <typename T>
JaggedTensor<T> jagged_dense_bmm(const JaggedTensor<T>& x, const DenseTensor<T>& w,
                                 const KernelOptions& opts) {
  if (w.rank() != 3) throw std::invalid_argument("jagged_dense_bmm: w must be [B, D, T]");
  const int64_t b = x.batch(), d = x.dim(), t = w.shape()[2];
  if (w.shape()[0] != b)
    throw std::invalid_argument("jagged_dense_bmm: batch mismatch (" + std::to_string(b) +
                                " vs " + std::to_string(w.shape()[0]) + ")");
  if (w.shape()[1] != d)
    throw std::invalid_argument("jagged_dense_bmm: dim mismatch (" + std::to_string(d) + " vs " +
                                std::to_string(w.shape()[1]) + ")");

  std::vector<T> out(static_cast<size_t>(x.total_rows() * t));
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = x.offset(i), end = x.offset(i + 1);
      for (int64_t r0 = begin; r0 < end; r0 += opts.block) {
        const int64_t r1 = tile_end(r0, opts.block, end);
        for (int64_t t0 = 0; t0 < t; t0 += opts.block) {
          const int64_t t1 = tile_end(t0, opts.block, t);
          for (int64_t r = r0; r < r1; ++r) {
            const T* xr = x.row(r);
            for (int64_t tt = t0; tt < t1; ++tt) {
              double acc = 0.0;
              for (int64_t dd = 0; dd < d; ++dd)
                acc += static_cast<double>(xr[dd]) * static_cast<double>(w.at(i, dd, tt));
              out[r * t + tt] = static_cast<T>(acc);
            }
          }
        }
      }
    }
  });
  return JaggedTensor<T>(x.offsets(), std::move(out), t);
}

template <typename T>
DenseTensor<T> jagged_jagged_bmm(const JaggedTensor<T>& x, const JaggedTensor<T>& y,
                                 const KernelOptions& opts) {
  require_matching_offsets(x, y, "jagged_jagged_bmm");
  const int64_t b = x.batch(), d = x.dim(), t = y.dim();
  auto out = DenseTensor<T>::zeros({b, d, t});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = x.offset(i), end = x.offset(i + 1);
      for (int64_t d0 = 0; d0 < d; d0 += opts.block) {
        const int64_t d1 = tile_end(d0, opts.block, d);
        for (int64_t t0 = 0; t0 < t; t0 += opts.block) {
          const int64_t t1 = tile_end(t0, opts.block, t);
          for (int64_t dd = d0; dd < d1; ++dd) {
            for (int64_t tt = t0; tt < t1; ++tt) {
              double acc = 0.0;
              for (int64_t r = begin; r < end; ++r)
                acc += static_cast<double>(x.row(r)[dd]) * static_cast<double>(y.row(r)[tt]);
              out.at(i, dd, tt) = static_cast<T>(acc);
            }
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
JaggedTensor<T> jagged_softmax(const JaggedTensor<T>& x, const KernelOptions& opts) {
  const int64_t b = x.batch(), d = x.dim();
  std::vector<T> out(x.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = x.offset(i), end = x.offset(i + 1);
      if (begin == end) continue;
      for (int64_t dd = 0; dd < d; ++dd) {
        double m = -std::numeric_limits<double>::infinity();
        for (int64_t r = begin; r < end; ++r)
          m = std::max(m, static_cast<double>(x.row(r)[dd]));
        double sum = 0.0;
        for (int64_t r = begin; r < end; ++r)
          sum += std::exp(static_cast<double>(x.row(r)[dd]) - m);
        for (int64_t r = begin; r < end; ++r)
          out[r * d + dd] =
              static_cast<T>(std::exp(static_cast<double>(x.row(r)[dd]) - m) / sum);
      }
    }
  });
  return JaggedTensor<T>(x.offsets(), std::move(out), d);
}

template <typename T>
Jagged2Tensor<T> jagged_jagged_bmm_jagged_out(const JaggedTensor<T>& q,
                                              const JaggedTensor<T>& k,
                                              const KernelOptions& opts) {
  require_matching_offsets(q, k, "jagged_jagged_bmm_jagged_out");
  if (q.dim() != k.dim())
    throw std::invalid_argument("jagged_jagged_bmm_jagged_out: dim mismatch (" +
                                std::to_string(q.dim()) + " vs " + std::to_string(k.dim()) + ")");
  const int64_t b = q.batch(), d = q.dim();
  const std::vector<int64_t> lengths = segment_lengths(q);
  std::vector<int64_t> sq_offsets(b + 1, 0);
  for (int64_t i = 0; i < b; ++i) sq_offsets[i + 1] = sq_offsets[i] + lengths[i] * lengths[i];
  std::vector<T> out(static_cast<size_t>(sq_offsets[b]));

  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = q.offset(i), n = lengths[i];
      T* blk = out.data() + sq_offsets[i];
      for (int64_t r0 = 0; r0 < n; r0 += opts.block) {
        const int64_t r1 = tile_end(r0, opts.block, n);
        for (int64_t c0 = 0; c0 < n; c0 += opts.block) {
          const int64_t c1 = tile_end(c0, opts.block, n);
          for (int64_t r = r0; r < r1; ++r) {
            const T* qr = q.row(begin + r);
            for (int64_t c = c0; c < c1; ++c) {
              const T* kc = k.row(begin + c);
              double acc = 0.0;
              for (int64_t dd = 0; dd < d; ++dd)
                acc += static_cast<double>(qr[dd]) * static_cast<double>(kc[dd]);
              blk[r * n + c] = static_cast<T>(acc);
            }
          }
        }
      }
    }
  });
  return Jagged2Tensor<T>(lengths, std::move(out));
}

template <typename T>
JaggedTensor<T> array_jagged_bmm_jagged_out(const Jagged2Tensor<T>& a,
                                            const JaggedTensor<T>& v,
                                            const KernelOptions& opts) {
  if (a.batch() != v.batch())
    throw std::invalid_argument("array_jagged_bmm_jagged_out: batch mismatch (" +
                                std::to_string(a.batch()) + " vs " + std::to_string(v.batch()) +
                                ")");
  for (int64_t i = 0; i < a.batch(); ++i)
    if (a.length(i) != v.length(i))
      throw std::invalid_argument("array_jagged_bmm_jagged_out: length mismatch at sample " +
                                  std::to_string(i));
  const int64_t b = v.batch(), d = v.dim();
  std::vector<T> out(v.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = v.offset(i), n = v.length(i);
      const T* blk = a.block(i);
      for (int64_t r0 = 0; r0 < n; r0 += opts.block) {
        const int64_t r1 = tile_end(r0, opts.block, n);
        for (int64_t d0 = 0; d0 < d; d0 += opts.block) {
          const int64_t d1 = tile_end(d0, opts.block, d);
          for (int64_t r = r0; r < r1; ++r) {
            for (int64_t dd = d0; dd < d1; ++dd) {
              double acc = 0.0;
              for (int64_t c = 0; c < n; ++c)
                acc += static_cast<double>(blk[r * n + c]) *
                       static_cast<double>(v.row(begin + c)[dd]);
              out[(begin + r) * d + dd] = static_cast<T>(acc);
            }
          }
        }
      }
    }
  });
  return JaggedTensor<T>(v.offsets(), std::move(out), d);
}

template <typename T>
Jagged2Tensor<T> jagged2_softmax(const Jagged2Tensor<T>& s, const KernelOptions& opts) {
  const int64_t b = s.batch();
  std::vector<T> out(s.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t n = s.length(i);
      const T* blk = s.block(i);
      T* oblk = out.data() + s.block_offset(i);
      for (int64_t r = 0; r < n; ++r) {
        const T* row = blk + r * n;
        double m = -std::numeric_limits<double>::infinity();
        for (int64_t c = 0; c < n; ++c) m = std::max(m, static_cast<double>(row[c]));
        double sum = 0.0;
        for (int64_t c = 0; c < n; ++c) sum += std::exp(static_cast<double>(row[c]) - m);
        for (int64_t c = 0; c < n; ++c)
          oblk[r * n + c] = static_cast<T>(std::exp(static_cast<double>(row[c]) - m) / sum);
      }
    }
  });
  return Jagged2Tensor<T>(s.seq_lengths(), std::move(out));
}

namespace {

template <typename T>
void validate_mlp(const JaggedTensor<T>& x, std::span<const MlpLayer<T>> layers) {
  if (layers.empty()) throw std::invalid_argument("jagged_mlp: at least one layer required");
  int64_t cur = x.dim();
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    if (w.rank() != 2)
      throw std::invalid_argument("jagged_mlp: layer " + std::to_string(l) +
                                  " weights must be rank 2");
    if (w.shape()[0] != cur)
      throw std::invalid_argument("jagged_mlp: layer " + std::to_string(l) +
                                  " input dim mismatch (" + std::to_string(cur) + " vs " +
                                  std::to_string(w.shape()[0]) + ")");
    if (static_cast<int64_t>(layers[l].bias.size()) != w.shape()[1])
      throw std::invalid_argument("jagged_mlp: layer " + std::to_string(l) + " bias size " +
                                  std::to_string(layers[l].bias.size()) + " != " +
                                  std::to_string(w.shape()[1]));
    cur = w.shape()[1];
  }
}

// One affine layer over row-major activations held in binary64.
template <typename T>
std::vector<double> mlp_layer_forward(const std::vector<double>& in, int64_t rows,
                                      const MlpLayer<T>& layer, std::vector<double>* preact) {
  const int64_t d_in = layer.weights.shape()[0], d_out = layer.weights.shape()[1];
  std::vector<double> out(static_cast<size_t>(rows * d_out));
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t o = 0; o < d_out; ++o) {
      double acc = static_cast<double>(layer.bias[o]);
      for (int64_t i = 0; i < d_in; ++i)
        acc += in[r * d_in + i] * static_cast<double>(layer.weights.at(i, o));
      if (preact) (*preact)[r * d_out + o] = acc;
      out[r * d_out + o] = layer.activation == Activation::relu ? std::max(acc, 0.0) : acc;
    }
  }
  return out;
}

}  // namespace

template <typename T>
JaggedTensor<T> jagged_mlp(const JaggedTensor<T>& x, std::span<const MlpLayer<T>> layers,
                           const KernelOptions& opts) {
  validate_mlp(x, layers);
  const int64_t rows = x.total_rows();
  std::vector<double> cur(x.values().begin(), x.values().end());
  for (const auto& layer : layers) cur = mlp_layer_forward(cur, rows, layer, nullptr);
  (void)opts;
  const int64_t d_out = layers.empty() ? x.dim() : layers.back().weights.shape()[1];
  std::vector<T> out(cur.size());
  for (size_t k = 0; k < cur.size(); ++k) out[k] = static_cast<T>(cur[k]);
  return JaggedTensor<T>(x.offsets(), std::move(out), d_out);
}

// ---------------------------------------------------------------------------
// VJPs
// ---------------------------------------------------------------------------

template <typename T>
JaggedDenseBmmGrads<T> jagged_dense_bmm_vjp(const JaggedTensor<T>& x, const DenseTensor<T>& w,
                                            const JaggedTensor<T>& grad_out,
                                            const KernelOptions& opts) {
  if (w.rank() != 3) throw std::invalid_argument("jagged_dense_bmm_vjp: w must be [B, D, T]");
  require_matching_offsets(x, grad_out, "jagged_dense_bmm_vjp");
  const int64_t b = x.batch(), d = x.dim(), t = w.shape()[2];
  if (grad_out.dim() != t)
    throw std::invalid_argument("jagged_dense_bmm_vjp: grad_out dim mismatch");

  std::vector<T> dx(x.values().size());
  auto dw = DenseTensor<T>::zeros(w.shape());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = x.offset(i), end = x.offset(i + 1);
      for (int64_t r = begin; r < end; ++r) {
        const T* go = grad_out.row(r);
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t tt = 0; tt < t; ++tt)
            acc += static_cast<double>(go[tt]) * static_cast<double>(w.at(i, dd, tt));
          dx[r * d + dd] = static_cast<T>(acc);
        }
      }
      for (int64_t dd = 0; dd < d; ++dd) {
        for (int64_t tt = 0; tt < t; ++tt) {
          double acc = 0.0;
          for (int64_t r = begin; r < end; ++r)
            acc += static_cast<double>(x.row(r)[dd]) * static_cast<double>(grad_out.row(r)[tt]);
          dw.at(i, dd, tt) = static_cast<T>(acc);
        }
      }
    }
  });
  return {JaggedTensor<T>(x.offsets(), std::move(dx), d), std::move(dw)};
}

template <typename T>
JaggedJaggedBmmGrads<T> jagged_jagged_bmm_vjp(const JaggedTensor<T>& x,
                                              const JaggedTensor<T>& y,
                                              const DenseTensor<T>& grad_out,
                                              const KernelOptions& opts) {
  require_matching_offsets(x, y, "jagged_jagged_bmm_vjp");
  const int64_t b = x.batch(), d = x.dim(), t = y.dim();
  if (grad_out.rank() != 3 || grad_out.shape()[0] != b || grad_out.shape()[1] != d ||
      grad_out.shape()[2] != t)
    throw std::invalid_argument("jagged_jagged_bmm_vjp: grad_out must be [B, D, T]");

  std::vector<T> dx(x.values().size()), dy(y.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = x.offset(i), end = x.offset(i + 1);
      for (int64_t r = begin; r < end; ++r) {
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t tt = 0; tt < t; ++tt)
            acc += static_cast<double>(y.row(r)[tt]) * static_cast<double>(grad_out.at(i, dd, tt));
          dx[r * d + dd] = static_cast<T>(acc);
        }
        for (int64_t tt = 0; tt < t; ++tt) {
          double acc = 0.0;
          for (int64_t dd = 0; dd < d; ++dd)
            acc += static_cast<double>(x.row(r)[dd]) * static_cast<double>(grad_out.at(i, dd, tt));
          dy[r * t + tt] = static_cast<T>(acc);
        }
      }
    }
  });
  return {JaggedTensor<T>(x.offsets(), std::move(dx), d),
          JaggedTensor<T>(y.offsets(), std::move(dy), t)};
}

template <typename T>
JaggedTensor<T> jagged_softmax_vjp(const JaggedTensor<T>& x, const JaggedTensor<T>& grad_out,
                                   const KernelOptions& opts) {
  require_matching_offsets(x, grad_out, "jagged_softmax_vjp");
  if (x.dim() != grad_out.dim())
    throw std::invalid_argument("jagged_softmax_vjp: dim mismatch");
  const int64_t b = x.batch(), d = x.dim();
  std::vector<T> dx(x.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = x.offset(i), end = x.offset(i + 1);
      if (begin == end) continue;
      for (int64_t dd = 0; dd < d; ++dd) {
        double m = -std::numeric_limits<double>::infinity();
        for (int64_t r = begin; r < end; ++r)
          m = std::max(m, static_cast<double>(x.row(r)[dd]));
        double sum = 0.0;
        for (int64_t r = begin; r < end; ++r)
          sum += std::exp(static_cast<double>(x.row(r)[dd]) - m);
        double dot = 0.0;
        for (int64_t r = begin; r < end; ++r) {
          const double p = std::exp(static_cast<double>(x.row(r)[dd]) - m) / sum;
          dot += static_cast<double>(grad_out.row(r)[dd]) * p;
        }
        for (int64_t r = begin; r < end; ++r) {
          const double p = std::exp(static_cast<double>(x.row(r)[dd]) - m) / sum;
          dx[r * d + dd] =
              static_cast<T>(p * (static_cast<double>(grad_out.row(r)[dd]) - dot));
        }
      }
    }
  });
  return JaggedTensor<T>(x.offsets(), std::move(dx), d);
}

template <typename T>
BmmJaggedOutGrads<T> jagged_jagged_bmm_jagged_out_vjp(const JaggedTensor<T>& q,
                                                      const JaggedTensor<T>& k,
                                                      const Jagged2Tensor<T>& grad_out,
                                                      const KernelOptions& opts) {
  require_matching_offsets(q, k, "jagged_jagged_bmm_jagged_out_vjp");
  const int64_t b = q.batch(), d = q.dim();
  for (int64_t i = 0; i < b; ++i)
    if (grad_out.length(i) != q.length(i))
      throw std::invalid_argument(
          "jagged_jagged_bmm_jagged_out_vjp: grad_out length mismatch at sample " +
          std::to_string(i));

  std::vector<T> dq(q.values().size()), dk(k.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = q.offset(i), n = q.length(i);
      const T* ds = grad_out.block(i);
      for (int64_t r = 0; r < n; ++r) {
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t c = 0; c < n; ++c)
            acc += static_cast<double>(ds[r * n + c]) *
                   static_cast<double>(k.row(begin + c)[dd]);
          dq[(begin + r) * d + dd] = static_cast<T>(acc);
        }
      }
      for (int64_t c = 0; c < n; ++c) {
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t r = 0; r < n; ++r)
            acc += static_cast<double>(ds[r * n + c]) *
                   static_cast<double>(q.row(begin + r)[dd]);
          dk[(begin + c) * d + dd] = static_cast<T>(acc);
        }
      }
    }
  });
  return {JaggedTensor<T>(q.offsets(), std::move(dq), d),
          JaggedTensor<T>(k.offsets(), std::move(dk), d)};
}

template <typename T>
ArrayJaggedBmmGrads<T> array_jagged_bmm_jagged_out_vjp(const Jagged2Tensor<T>& a,
                                                       const JaggedTensor<T>& v,
                                                       const JaggedTensor<T>& grad_out,
                                                       const KernelOptions& opts) {
  require_matching_offsets(v, grad_out, "array_jagged_bmm_jagged_out_vjp");
  const int64_t b = v.batch(), d = v.dim();
  for (int64_t i = 0; i < b; ++i)
    if (a.length(i) != v.length(i))
      throw std::invalid_argument(
          "array_jagged_bmm_jagged_out_vjp: length mismatch at sample " + std::to_string(i));

  std::vector<T> da(a.values().size()), dv(v.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t begin = v.offset(i), n = v.length(i);
      const T* ablk = a.block(i);
      T* dablk = da.data() + a.block_offset(i);
      for (int64_t r = 0; r < n; ++r) {
        const T* go = grad_out.row(begin + r);
        for (int64_t c = 0; c < n; ++c) {
          double acc = 0.0;
          for (int64_t dd = 0; dd < d; ++dd)
            acc += static_cast<double>(go[dd]) * static_cast<double>(v.row(begin + c)[dd]);
          dablk[r * n + c] = static_cast<T>(acc);
        }
      }
      for (int64_t c = 0; c < n; ++c) {
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t r = 0; r < n; ++r)
            acc += static_cast<double>(ablk[r * n + c]) *
                   static_cast<double>(grad_out.row(begin + r)[dd]);
          dv[(begin + c) * d + dd] = static_cast<T>(acc);
        }
      }
    }
  });
  return {Jagged2Tensor<T>(a.seq_lengths(), std::move(da)),
          JaggedTensor<T>(v.offsets(), std::move(dv), d)};
}

template <typename T>
Jagged2Tensor<T> jagged2_softmax_vjp(const Jagged2Tensor<T>& s, const Jagged2Tensor<T>& grad_out,
                                     const KernelOptions& opts) {
  if (s.batch() != grad_out.batch() || s.seq_lengths() != grad_out.seq_lengths())
    throw std::invalid_argument("jagged2_softmax_vjp: layout mismatch");
  const int64_t b = s.batch();
  std::vector<T> ds(s.values().size());
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i) {
      const int64_t n = s.length(i);
      const T* blk = s.block(i);
      const T* gblk = grad_out.block(i);
      T* dblk = ds.data() + s.block_offset(i);
      for (int64_t r = 0; r < n; ++r) {
        const T* row = blk + r * n;
        double m = -std::numeric_limits<double>::infinity();
        for (int64_t c = 0; c < n; ++c) m = std::max(m, static_cast<double>(row[c]));
        double sum = 0.0;
        for (int64_t c = 0; c < n; ++c) sum += std::exp(static_cast<double>(row[c]) - m);
        double dot = 0.0;
        for (int64_t c = 0; c < n; ++c) {
          const double p = std::exp(static_cast<double>(row[c]) - m) / sum;
          dot += static_cast<double>(gblk[r * n + c]) * p;
        }
        for (int64_t c = 0; c < n; ++c) {
          const double p = std::exp(static_cast<double>(row[c]) - m) / sum;
          dblk[r * n + c] =
              static_cast<T>(p * (static_cast<double>(gblk[r * n + c]) - dot));
        }
      }
    }
  });
  return Jagged2Tensor<T>(s.seq_lengths(), std::move(ds));
}

template <typename T>
JaggedMlpGrads<T> jagged_mlp_vjp(const JaggedTensor<T>& x, std::span<const MlpLayer<T>> layers,
                                 const JaggedTensor<T>& grad_out, const KernelOptions& opts) {
  validate_mlp(x, layers);
  require_matching_offsets(x, grad_out, "jagged_mlp_vjp");
  (void)opts;
  const int64_t rows = x.total_rows();
  const size_t n_layers = layers.size();

  // Forward pass retaining inputs and pre-activations of every layer.
  std::vector<std::vector<double>> acts(n_layers + 1);
  std::vector<std::vector<double>> preacts(n_layers);
  acts[0].assign(x.values().begin(), x.values().end());
  for (size_t l = 0; l < n_layers; ++l) {
    preacts[l].resize(static_cast<size_t>(rows * layers[l].weights.shape()[1]));
    acts[l + 1] = mlp_layer_forward(acts[l], rows, layers[l], &preacts[l]);
  }

  std::vector<double> delta(grad_out.values().begin(), grad_out.values().end());
  JaggedMlpGrads<T> grads{JaggedTensor<T>(x.offsets(), std::vector<T>(x.values().size()), x.dim()),
                          {}};
  grads.dlayers.resize(n_layers, MlpLayerGrads<T>{DenseTensor<T>::zeros({1, 1}), {}});

  for (size_t li = n_layers; li-- > 0;) {
    const auto& layer = layers[li];
    const int64_t d_in = layer.weights.shape()[0], d_out = layer.weights.shape()[1];
    if (layer.activation == Activation::relu) {
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t o = 0; o < d_out; ++o)
          if (preacts[li][r * d_out + o] <= 0.0) delta[r * d_out + o] = 0.0;
    }
    auto dw = DenseTensor<T>::zeros({d_in, d_out});
    std::vector<T> db(d_out);
    for (int64_t o = 0; o < d_out; ++o) {
      double acc = 0.0;
      for (int64_t r = 0; r < rows; ++r) acc += delta[r * d_out + o];
      db[o] = static_cast<T>(acc);
    }
    for (int64_t i = 0; i < d_in; ++i) {
      for (int64_t o = 0; o < d_out; ++o) {
        double acc = 0.0;
        for (int64_t r = 0; r < rows; ++r)
          acc += acts[li][r * d_in + i] * delta[r * d_out + o];
        dw.at(i, o) = static_cast<T>(acc);
      }
    }
    grads.dlayers[li] = MlpLayerGrads<T>{std::move(dw), std::move(db)};

    std::vector<double> prev(static_cast<size_t>(rows * d_in));
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t i = 0; i < d_in; ++i) {
        double acc = 0.0;
        for (int64_t o = 0; o < d_out; ++o)
          acc += delta[r * d_out + o] * static_cast<double>(layer.weights.at(i, o));
        prev[r * d_in + i] = acc;
      }
    }
    delta = std::move(prev);
  }

  std::vector<T> dx(delta.size());
  for (size_t k = 0; k < delta.size(); ++k) dx[k] = static_cast<T>(delta[k]);
  grads.dx = JaggedTensor<T>(x.offsets(), std::move(dx), x.dim());
  return grads;
}

#define JAGGED_INSTANTIATE_LINALG(T)                                                           \
  template JaggedTensor<T> jagged_dense_bmm(const JaggedTensor<T>&, const DenseTensor<T>&,     \
                                            const KernelOptions&);                             \
  template DenseTensor<T> jagged_jagged_bmm(const JaggedTensor<T>&, const JaggedTensor<T>&,    \
                                            const KernelOptions&);                             \
  template JaggedTensor<T> jagged_softmax(const JaggedTensor<T>&, const KernelOptions&);       \
  template Jagged2Tensor<T> jagged_jagged_bmm_jagged_out(                                      \
      const JaggedTensor<T>&, const JaggedTensor<T>&, const KernelOptions&);                   \
  template JaggedTensor<T> array_jagged_bmm_jagged_out(                                        \
      const Jagged2Tensor<T>&, const JaggedTensor<T>&, const KernelOptions&);                  \
  template Jagged2Tensor<T> jagged2_softmax(const Jagged2Tensor<T>&, const KernelOptions&);    \
  template JaggedTensor<T> jagged_mlp(const JaggedTensor<T>&, std::span<const MlpLayer<T>>,    \
                                      const KernelOptions&);                                   \
  template JaggedDenseBmmGrads<T> jagged_dense_bmm_vjp(                                        \
      const JaggedTensor<T>&, const DenseTensor<T>&, const JaggedTensor<T>&,                   \
      const KernelOptions&);                                                                   \
  template JaggedJaggedBmmGrads<T> jagged_jagged_bmm_vjp(                                      \
      const JaggedTensor<T>&, const JaggedTensor<T>&, const DenseTensor<T>&,                   \
      const KernelOptions&);                                                                   \
  template JaggedTensor<T> jagged_softmax_vjp(const JaggedTensor<T>&, const JaggedTensor<T>&,  \
                                              const KernelOptions&);                           \
  template BmmJaggedOutGrads<T> jagged_jagged_bmm_jagged_out_vjp(                              \
      const JaggedTensor<T>&, const JaggedTensor<T>&, const Jagged2Tensor<T>&,                 \
      const KernelOptions&);                                                                   \
  template ArrayJaggedBmmGrads<T> array_jagged_bmm_jagged_out_vjp(                             \
      const Jagged2Tensor<T>&, const JaggedTensor<T>&, const JaggedTensor<T>&,                 \
      const KernelOptions&);                                                                   \
  template Jagged2Tensor<T> jagged2_softmax_vjp(const Jagged2Tensor<T>&,                       \
                                                const Jagged2Tensor<T>&,                       \
                                                const KernelOptions&);                         \
  template JaggedMlpGrads<T> jagged_mlp_vjp(const JaggedTensor<T>&,                            \
                                            std::span<const MlpLayer<T>>,                     \
                                            const JaggedTensor<T>&, const KernelOptions&);

JAGGED_INSTANTIATE_LINALG(float)
JAGGED_INSTANTIATE_LINALG(double)

#undef JAGGED_INSTANTIATE_LINALG

}  // namespace jagged
