#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "jagged/rng.hpp"
#include "jagged/tensor.hpp"
#include "support/reference.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

template <typename T>
jagged::JaggedTensor<T> random_jagged(std::span<const int64_t> lengths, int64_t dim,
                                      jagged::Rng& rng, double lo = -1.0, double hi = 1.0) {
  int64_t rows = 0;
  for (int64_t n : lengths) rows += n;
  return jagged::make_jagged<T>(lengths, jagged::uniform_values<T>(rng, rows * dim, lo, hi),
                                dim);
}

template <typename T>
jagged::Jagged2Tensor<T> random_jagged2(std::span<const int64_t> lengths, jagged::Rng& rng,
                                        double lo = -1.0, double hi = 1.0) {
  int64_t n2 = 0;
  for (int64_t n : lengths) n2 += n * n;
  return jagged::make_jagged2<T>(lengths, jagged::uniform_values<T>(rng, n2, lo, hi));
}

template <typename T>
jagged::DenseTensor<T> random_dense(std::vector<int64_t> shape, jagged::Rng& rng,
                                    double lo = -1.0, double hi = 1.0) {
  int64_t n = 1;
  for (int64_t s : shape) n *= s;
  return jagged::DenseTensor<T>(std::move(shape), jagged::uniform_values<T>(rng, n, lo, hi));
}

// Max relative error between a jagged tensor and the valid region of a padded
// reference result.
template <typename T>
double max_rel_err_vs_padded(const jagged::JaggedTensor<T>& x, const refimpl::Padded& ref) {
  double worst = 0.0;
  for (int64_t i = 0; i < x.batch(); ++i)
    for (int64_t r = 0; r < x.length(i); ++r)
      for (int64_t c = 0; c < x.dim(); ++c)
        worst = std::max(worst, rel_err(static_cast<double>(x.row(x.offset(i) + r)[c]),
                                        ref.at(i, r, c)));
  return worst;
}

template <typename T>
double max_rel_err_vs_padded_blocks(const jagged::Jagged2Tensor<T>& s,
                                    const refimpl::Padded& ref) {
  double worst = 0.0;
  for (int64_t i = 0; i < s.batch(); ++i) {
    const int64_t n = s.length(i);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < n; ++c)
        worst = std::max(
            worst, rel_err(static_cast<double>(s.block(i)[r * n + c]), ref.at(i, r, c)));
  }
  return worst;
}

template <typename T>
double max_rel_err_dense(const jagged::DenseTensor<T>& a, const refimpl::Padded& ref) {
  double worst = 0.0;
  for (size_t k = 0; k < a.data().size(); ++k)
    worst = std::max(worst, rel_err(static_cast<double>(a.data()[k]), ref.data[k]));
  return worst;
}

// Valid-region comparison of a padded library output against the reference.
template <typename T>
double max_rel_err_rows(const jagged::DenseTensor<T>& a, const refimpl::Padded& ref,
                        std::span<const int64_t> lengths) {
  double worst = 0.0;
  for (int64_t i = 0; i < ref.b; ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t c = 0; c < ref.d; ++c)
        worst = std::max(worst, rel_err(static_cast<double>(a.at(i, r, c)), ref.at(i, r, c)));
  return worst;
}

template <typename T>
double max_rel_err_jagged(const jagged::JaggedTensor<T>& a, const jagged::JaggedTensor<T>& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.values().size(); ++k)
    worst = std::max(worst, rel_err(static_cast<double>(a.values()[k]),
                                    static_cast<double>(b.values()[k])));
  return worst;
}

inline int64_t max_length(std::span<const int64_t> lengths) {
  int64_t m = 0;
  for (int64_t n : lengths) m = std::max(m, n);
  return m;
}

}  // namespace testutil
