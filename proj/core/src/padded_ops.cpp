#include "jagged/padded_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jagged/parallel.hpp"

namespace jagged::padded {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_rank3(const auto& t, const char* op) {
  if (t.rank() != 3) throw std::invalid_argument(std::string(op) + ": rank-3 input required");
}

}  // namespace

template <typename T>
DenseTensor<T> jagged_dense_bmm(const DenseTensor<T>& x, const DenseTensor<T>& w,
                                const KernelOptions& opts) {
  require_rank3(x, "padded::jagged_dense_bmm");
  require_rank3(w, "padded::jagged_dense_bmm");
  const int64_t b = x.shape()[0], l = x.shape()[1], d = x.shape()[2], t = w.shape()[2];
  if (w.shape()[0] != b || w.shape()[1] != d)
    throw std::invalid_argument("padded::jagged_dense_bmm: shape mismatch");
  auto out = DenseTensor<T>::zeros({b, l, t});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i)
      for (int64_t r = 0; r < l; ++r)
        for (int64_t tt = 0; tt < t; ++tt) {
          double acc = 0.0;
          for (int64_t dd = 0; dd < d; ++dd)
            acc += static_cast<double>(x.at(i, r, dd)) * static_cast<double>(w.at(i, dd, tt));
          out.at(i, r, tt) = static_cast<T>(acc);
        }
  });
  return out;
}

template <typename T>
DenseTensor<T> jagged_jagged_bmm(const DenseTensor<T>& x, const DenseTensor<T>& y,
                                 const KernelOptions& opts) {
  require_rank3(x, "padded::jagged_jagged_bmm");
  require_rank3(y, "padded::jagged_jagged_bmm");
  const int64_t b = x.shape()[0], l = x.shape()[1], d = x.shape()[2], t = y.shape()[2];
  if (y.shape()[0] != b || y.shape()[1] != l)
    throw std::invalid_argument("padded::jagged_jagged_bmm: shape mismatch");
  auto out = DenseTensor<T>::zeros({b, d, t});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i)
      for (int64_t dd = 0; dd < d; ++dd)
        for (int64_t tt = 0; tt < t; ++tt) {
          double acc = 0.0;
          for (int64_t r = 0; r < l; ++r)
            acc += static_cast<double>(x.at(i, r, dd)) * static_cast<double>(y.at(i, r, tt));
          out.at(i, dd, tt) = static_cast<T>(acc);
        }
  });
  return out;
}

template <typename T>
DenseTensor<T> jagged_softmax(const DenseTensor<T>& x, const KernelOptions& opts) {
  require_rank3(x, "padded::jagged_softmax");
  const int64_t b = x.shape()[0], l = x.shape()[1], d = x.shape()[2];
  auto out = DenseTensor<T>::zeros({b, l, d});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i)
      for (int64_t dd = 0; dd < d; ++dd) {
        double m = kNegInf;
        for (int64_t r = 0; r < l; ++r) m = std::max(m, static_cast<double>(x.at(i, r, dd)));
        if (m == kNegInf) continue;  // fully padded column
        double sum = 0.0;
        for (int64_t r = 0; r < l; ++r)
          sum += std::exp(static_cast<double>(x.at(i, r, dd)) - m);
        for (int64_t r = 0; r < l; ++r)
          out.at(i, r, dd) =
              static_cast<T>(std::exp(static_cast<double>(x.at(i, r, dd)) - m) / sum);
      }
  });
  return out;
}

template <typename T>
DenseTensor<T> jagged_jagged_bmm_jagged_out(const DenseTensor<T>& q, const DenseTensor<T>& k,
                                            const KernelOptions& opts) {
  require_rank3(q, "padded::jagged_jagged_bmm_jagged_out");
  const int64_t b = q.shape()[0], l = q.shape()[1], d = q.shape()[2];
  if (k.shape() != q.shape())
    throw std::invalid_argument("padded::jagged_jagged_bmm_jagged_out: shape mismatch");
  auto out = DenseTensor<T>::zeros({b, l, l});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i)
      for (int64_t r = 0; r < l; ++r)
        for (int64_t c = 0; c < l; ++c) {
          double acc = 0.0;
          for (int64_t dd = 0; dd < d; ++dd)
            acc += static_cast<double>(q.at(i, r, dd)) * static_cast<double>(k.at(i, c, dd));
          out.at(i, r, c) = static_cast<T>(acc);
        }
  });
  return out;
}

template <typename T>
DenseTensor<T> array_jagged_bmm_jagged_out(const DenseTensor<T>& a, const DenseTensor<T>& v,
                                           const KernelOptions& opts) {
  require_rank3(a, "padded::array_jagged_bmm_jagged_out");
  require_rank3(v, "padded::array_jagged_bmm_jagged_out");
  const int64_t b = v.shape()[0], l = v.shape()[1], d = v.shape()[2];
  if (a.shape()[0] != b || a.shape()[1] != l || a.shape()[2] != l)
    throw std::invalid_argument("padded::array_jagged_bmm_jagged_out: shape mismatch");
  auto out = DenseTensor<T>::zeros({b, l, d});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i)
      for (int64_t r = 0; r < l; ++r)
        for (int64_t dd = 0; dd < d; ++dd) {
          double acc = 0.0;
          for (int64_t c = 0; c < l; ++c)
            acc += static_cast<double>(a.at(i, r, c)) * static_cast<double>(v.at(i, c, dd));
          out.at(i, r, dd) = static_cast<T>(acc);
        }
  });
  return out;
}

template <typename T>
DenseTensor<T> jagged2_softmax(const DenseTensor<T>& s, const KernelOptions& opts) {
  require_rank3(s, "padded::jagged2_softmax");
  const int64_t b = s.shape()[0], l = s.shape()[1];
  if (s.shape()[2] != l)
    throw std::invalid_argument("padded::jagged2_softmax: [B, L, L] input required");
  auto out = DenseTensor<T>::zeros({b, l, l});
  parallel_for(b, opts.threads, [&](int64_t i0, int64_t i1) {
    for (int64_t i = i0; i < i1; ++i)
      for (int64_t r = 0; r < l; ++r) {
        double m = kNegInf;
        for (int64_t c = 0; c < l; ++c) m = std::max(m, static_cast<double>(s.at(i, r, c)));
        if (m == kNegInf) continue;
        double sum = 0.0;
        for (int64_t c = 0; c < l; ++c)
          sum += std::exp(static_cast<double>(s.at(i, r, c)) - m);
        for (int64_t c = 0; c < l; ++c)
          out.at(i, r, c) =
              static_cast<T>(std::exp(static_cast<double>(s.at(i, r, c)) - m) / sum);
      }
  });
  return out;
}

template <typename T>
DenseTensor<T> jagged_mlp(const DenseTensor<T>& x, std::span<const MlpLayer<T>> layers,
                          const KernelOptions& opts) {
  require_rank3(x, "padded::jagged_mlp");
  if (layers.empty())
    throw std::invalid_argument("padded::jagged_mlp: at least one layer required");
  const int64_t b = x.shape()[0], l = x.shape()[1];
  const int64_t rows = b * l;
  std::vector<double> cur(x.data().begin(), x.data().end());
  int64_t width = x.shape()[2];
  for (const auto& layer : layers) {
    const int64_t d_in = layer.weights.shape()[0], d_out = layer.weights.shape()[1];
    if (d_in != width) throw std::invalid_argument("padded::jagged_mlp: dim chain mismatch");
    std::vector<double> next(static_cast<size_t>(rows * d_out));
    parallel_for(rows, opts.threads, [&](int64_t r0, int64_t r1) {
      for (int64_t r = r0; r < r1; ++r)
        for (int64_t o = 0; o < d_out; ++o) {
          double acc = static_cast<double>(layer.bias[o]);
          for (int64_t ii = 0; ii < d_in; ++ii)
            acc += cur[r * d_in + ii] * static_cast<double>(layer.weights.at(ii, o));
          next[r * d_out + o] =
              layer.activation == Activation::relu ? std::max(acc, 0.0) : acc;
        }
    });
    cur = std::move(next);
    width = d_out;
  }
  std::vector<T> out(cur.size());
  for (size_t i = 0; i < cur.size(); ++i) out[i] = static_cast<T>(cur[i]);
  return DenseTensor<T>({b, l, width}, std::move(out));
}

#define JAGGED_INSTANTIATE_PADDED(T)                                                          \
  template DenseTensor<T> jagged_dense_bmm(const DenseTensor<T>&, const DenseTensor<T>&,      \
                                           const KernelOptions&);                             \
  template DenseTensor<T> jagged_jagged_bmm(const DenseTensor<T>&, const DenseTensor<T>&,     \
                                            const KernelOptions&);                            \
  template DenseTensor<T> jagged_softmax(const DenseTensor<T>&, const KernelOptions&);        \
  template DenseTensor<T> jagged_jagged_bmm_jagged_out(                                       \
      const DenseTensor<T>&, const DenseTensor<T>&, const KernelOptions&);                    \
  template DenseTensor<T> array_jagged_bmm_jagged_out(                                        \
      const DenseTensor<T>&, const DenseTensor<T>&, const KernelOptions&);                    \
  template DenseTensor<T> jagged2_softmax(const DenseTensor<T>&, const KernelOptions&);       \
  template DenseTensor<T> jagged_mlp(const DenseTensor<T>&, std::span<const MlpLayer<T>>,     \
                                     const KernelOptions&);

JAGGED_INSTANTIATE_PADDED(float)
JAGGED_INSTANTIATE_PADDED(double)

#undef JAGGED_INSTANTIATE_PADDED

}  // namespace jagged::padded
