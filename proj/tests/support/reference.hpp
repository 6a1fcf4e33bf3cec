#pragma once

// Test-side oracles: plain per-sample loops over padded binary64 arrays,
// written independently of the library kernels. Valid regions are computed
// directly from lengths; everything else stays zero.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "jagged/tensor.hpp"

namespace refimpl {

struct Padded {
  int64_t b = 0, l = 0, d = 0;
  std::vector<double> data;  // row-major [b, l, d]

  double& at(int64_t i, int64_t r, int64_t c) { return data[(i * l + r) * d + c]; }
  double at(int64_t i, int64_t r, int64_t c) const { return data[(i * l + r) * d + c]; }
};

inline Padded zeros(int64_t b, int64_t l, int64_t d) {
  return {b, l, d, std::vector<double>(static_cast<size_t>(b * l * d), 0.0)};
}

// Hand-rolled padding of a jagged tensor (pad value 0).
template <typename T>
Padded pad_rows(const jagged::JaggedTensor<T>& x, int64_t max_len) {
  Padded out = zeros(x.batch(), max_len, x.dim());
  for (int64_t i = 0; i < x.batch(); ++i)
    for (int64_t r = 0; r < x.length(i) && r < max_len; ++r)
      for (int64_t c = 0; c < x.dim(); ++c)
        out.at(i, r, c) = static_cast<double>(x.row(x.offset(i) + r)[c]);
  return out;
}

template <typename T>
Padded pad_blocks(const jagged::Jagged2Tensor<T>& s, int64_t max_len) {
  Padded out = zeros(s.batch(), max_len, max_len);
  for (int64_t i = 0; i < s.batch(); ++i) {
    const int64_t n = s.length(i);
    for (int64_t r = 0; r < n && r < max_len; ++r)
      for (int64_t c = 0; c < n && c < max_len; ++c)
        out.at(i, r, c) = static_cast<double>(s.block(i)[r * n + c]);
  }
  return out;
}

template <typename T>
Padded from_dense(const jagged::DenseTensor<T>& x) {
  Padded out = zeros(x.shape()[0], x.shape()[1], x.shape()[2]);
  for (size_t k = 0; k < x.data().size(); ++k) out.data[k] = static_cast<double>(x.data()[k]);
  return out;
}

inline Padded ref_jagged_dense_bmm(const Padded& x, std::span<const int64_t> lengths,
                                   const Padded& w) {
  Padded out = zeros(x.b, x.l, w.d);
  for (int64_t i = 0; i < x.b; ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t t = 0; t < w.d; ++t) {
        double acc = 0.0;
        for (int64_t dd = 0; dd < x.d; ++dd) acc += x.at(i, r, dd) * w.at(i, dd, t);
        out.at(i, r, t) = acc;
      }
  return out;
}

inline Padded ref_jagged_jagged_bmm(const Padded& x, const Padded& y,
                                    std::span<const int64_t> lengths) {
  Padded out = zeros(x.b, x.d, y.d);
  for (int64_t i = 0; i < x.b; ++i)
    for (int64_t dd = 0; dd < x.d; ++dd)
      for (int64_t t = 0; t < y.d; ++t) {
        double acc = 0.0;
        for (int64_t r = 0; r < lengths[i]; ++r) acc += x.at(i, r, dd) * y.at(i, r, t);
        out.at(i, dd, t) = acc;
      }
  return out;
}

inline Padded ref_jagged_softmax(const Padded& x, std::span<const int64_t> lengths) {
  Padded out = zeros(x.b, x.l, x.d);
  for (int64_t i = 0; i < x.b; ++i) {
    const int64_t n = lengths[i];
    if (n == 0) continue;
    for (int64_t dd = 0; dd < x.d; ++dd) {
      double m = x.at(i, 0, dd);
      for (int64_t r = 1; r < n; ++r) m = std::max(m, x.at(i, r, dd));
      double sum = 0.0;
      for (int64_t r = 0; r < n; ++r) sum += std::exp(x.at(i, r, dd) - m);
      for (int64_t r = 0; r < n; ++r) out.at(i, r, dd) = std::exp(x.at(i, r, dd) - m) / sum;
    }
  }
  return out;
}

inline Padded ref_bmm_jagged_out(const Padded& q, const Padded& k,
                                 std::span<const int64_t> lengths) {
  Padded out = zeros(q.b, q.l, q.l);
  for (int64_t i = 0; i < q.b; ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t c = 0; c < lengths[i]; ++c) {
        double acc = 0.0;
        for (int64_t dd = 0; dd < q.d; ++dd) acc += q.at(i, r, dd) * k.at(i, c, dd);
        out.at(i, r, c) = acc;
      }
  return out;
}

inline Padded ref_array_jagged_bmm(const Padded& a, const Padded& v,
                                   std::span<const int64_t> lengths) {
  Padded out = zeros(v.b, v.l, v.d);
  for (int64_t i = 0; i < v.b; ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t dd = 0; dd < v.d; ++dd) {
        double acc = 0.0;
        for (int64_t c = 0; c < lengths[i]; ++c) acc += a.at(i, r, c) * v.at(i, c, dd);
        out.at(i, r, dd) = acc;
      }
  return out;
}

inline Padded ref_jagged2_softmax(const Padded& s, std::span<const int64_t> lengths) {
  Padded out = zeros(s.b, s.l, s.l);
  for (int64_t i = 0; i < s.b; ++i) {
    const int64_t n = lengths[i];
    for (int64_t r = 0; r < n; ++r) {
      double m = s.at(i, r, 0);
      for (int64_t c = 1; c < n; ++c) m = std::max(m, s.at(i, r, c));
      double sum = 0.0;
      for (int64_t c = 0; c < n; ++c) sum += std::exp(s.at(i, r, c) - m);
      for (int64_t c = 0; c < n; ++c) out.at(i, r, c) = std::exp(s.at(i, r, c) - m) / sum;
    }
  }
  return out;
}

struct RefMlpLayer {
  std::vector<double> weights;  // [d_in, d_out] row-major
  std::vector<double> bias;     // d_out
  int64_t d_in = 0, d_out = 0;
  bool relu = false;
};

inline Padded ref_mlp(const Padded& x, std::span<const int64_t> lengths,
                      std::span<const RefMlpLayer> layers) {
  Padded cur = x;
  for (const auto& layer : layers) {
    Padded next = zeros(cur.b, cur.l, layer.d_out);
    for (int64_t i = 0; i < cur.b; ++i)
      for (int64_t r = 0; r < lengths[i]; ++r)
        for (int64_t o = 0; o < layer.d_out; ++o) {
          double acc = layer.bias[o];
          for (int64_t ii = 0; ii < layer.d_in; ++ii)
            acc += cur.at(i, r, ii) * layer.weights[ii * layer.d_out + o];
          next.at(i, r, o) = layer.relu && acc < 0.0 ? 0.0 : acc;
        }
    cur = std::move(next);
  }
  return cur;
}

// Brute-force three-loop attention on the valid region (scaled scores,
// two-pass safe softmax).
inline Padded ref_attention(const Padded& q, const Padded& k, const Padded& v,
                            std::span<const int64_t> lengths) {
  Padded out = zeros(q.b, q.l, q.d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.d));
  for (int64_t i = 0; i < q.b; ++i) {
    const int64_t n = lengths[i];
    for (int64_t a = 0; a < n; ++a) {
      std::vector<double> scores(n);
      for (int64_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int64_t dd = 0; dd < q.d; ++dd) acc += q.at(i, a, dd) * k.at(i, c, dd);
        scores[c] = acc * scale;
      }
      double m = scores[0];
      for (int64_t c = 1; c < n; ++c) m = std::max(m, scores[c]);
      double sum = 0.0;
      for (int64_t c = 0; c < n; ++c) {
        scores[c] = std::exp(scores[c] - m);
        sum += scores[c];
      }
      for (int64_t dd = 0; dd < q.d; ++dd) {
        double acc = 0.0;
        for (int64_t c = 0; c < n; ++c) acc += (scores[c] / sum) * v.at(i, c, dd);
        out.at(i, a, dd) = acc;
      }
    }
  }
  return out;
}

// Per-row logsumexp of the scaled valid scores (for checking saved state).
inline std::vector<double> ref_logsumexp(const Padded& q, const Padded& k,
                                         std::span<const int64_t> lengths) {
  std::vector<double> lse;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.d));
  for (int64_t i = 0; i < q.b; ++i) {
    const int64_t n = lengths[i];
    for (int64_t a = 0; a < n; ++a) {
      std::vector<double> scores(n);
      for (int64_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int64_t dd = 0; dd < q.d; ++dd) acc += q.at(i, a, dd) * k.at(i, c, dd);
        scores[c] = acc * scale;
      }
      double m = scores[0];
      for (int64_t c = 1; c < n; ++c) m = std::max(m, scores[c]);
      double sum = 0.0;
      for (int64_t c = 0; c < n; ++c) sum += std::exp(scores[c] - m);
      lse.push_back(m + std::log(sum));
    }
  }
  return lse;
}

// Cross-attention of fixed targets (queries) against variable-length
// feature keys/values.
inline Padded ref_cross_attention(const Padded& targets, const Padded& k, const Padded& v,
                                  std::span<const int64_t> lengths) {
  Padded out = zeros(targets.b, targets.l, targets.d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(targets.d));
  for (int64_t i = 0; i < targets.b; ++i) {
    const int64_t n = lengths[i];
    if (n == 0) continue;
    for (int64_t a = 0; a < targets.l; ++a) {
      std::vector<double> scores(n);
      for (int64_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int64_t dd = 0; dd < targets.d; ++dd)
          acc += targets.at(i, a, dd) * k.at(i, c, dd);
        scores[c] = acc * scale;
      }
      double m = scores[0];
      for (int64_t c = 1; c < n; ++c) m = std::max(m, scores[c]);
      double sum = 0.0;
      for (int64_t c = 0; c < n; ++c) {
        scores[c] = std::exp(scores[c] - m);
        sum += scores[c];
      }
      for (int64_t dd = 0; dd < targets.d; ++dd) {
        double acc = 0.0;
        for (int64_t c = 0; c < n; ++c) acc += (scores[c] / sum) * v.at(i, c, dd);
        out.at(i, a, dd) = acc;
      }
    }
  }
  return out;
}

}  // namespace refimpl
