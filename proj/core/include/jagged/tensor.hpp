#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace jagged {

/// Batch of variable-length sequences of fixed-width rows, stored without
/// padding: a flat row-major values buffer plus a length-(B+1) offsets array.
/// Segment i occupies value rows [offsets[i], offsets[i+1]); segments may be
/// empty. Immutable after construction.
template <typename T>
class JaggedTensor {
 public:
  JaggedTensor(std::vector<int64_t> offsets, std::vector<T> values, int64_t dim);

  int64_t batch() const { return static_cast<int64_t>(offsets_.size()) - 1; }
  int64_t dim() const { return dim_; }
  int64_t total_rows() const { return offsets_.back(); }
  int64_t length(int64_t i) const { return offsets_[i + 1] - offsets_[i]; }
  int64_t offset(int64_t i) const { return offsets_[i]; }

  const std::vector<int64_t>& offsets() const { return offsets_; }
  const std::vector<T>& values() const { return values_; }

  const T* row(int64_t r) const { return values_.data() + r * dim_; }
  std::span<const T> row_span(int64_t r) const { return {row(r), static_cast<size_t>(dim_)}; }

  bool same_offsets(const JaggedTensor& other) const { return offsets_ == other.offsets_; }

 private:
  int64_t dim_;
  std::vector<int64_t> offsets_;
  std::vector<T> values_;
};

/// Batch of per-sample square matrices (one Bi x Bi block per sample, e.g.
/// attention scores), stored flat with quadratic offsets:
/// sq_offsets[i+1] = sq_offsets[i] + Bi^2. Immutable after construction.
template <typename T>
class Jagged2Tensor {
 public:
  Jagged2Tensor(std::vector<int64_t> seq_lengths, std::vector<T> values);

  int64_t batch() const { return static_cast<int64_t>(seq_lengths_.size()); }
  int64_t length(int64_t i) const { return seq_lengths_[i]; }
  int64_t block_offset(int64_t i) const { return sq_offsets_[i]; }

  const std::vector<int64_t>& seq_lengths() const { return seq_lengths_; }
  const std::vector<int64_t>& sq_offsets() const { return sq_offsets_; }
  const std::vector<T>& values() const { return values_; }

  /// Row-major Bi x Bi block of sample i.
  const T* block(int64_t i) const { return values_.data() + sq_offsets_[i]; }

 private:
  std::vector<int64_t> seq_lengths_;
  std::vector<int64_t> sq_offsets_;
  std::vector<T> values_;
};

/// Plain rank-2 or rank-3 row-major array. Used for per-sample weights,
/// targets, and as the padded counterpart of jagged layouts.
template <typename T>
class DenseTensor {
 public:
  DenseTensor(std::vector<int64_t> shape, std::vector<T> data);

  static DenseTensor zeros(std::vector<int64_t> shape);

  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  const std::vector<T>& data() const { return data_; }
  std::vector<T>& mutable_data() { return data_; }

  const T& at(int64_t i, int64_t j) const { return data_[i * shape_[1] + j]; }
  T& at(int64_t i, int64_t j) { return data_[i * shape_[1] + j]; }
  const T& at(int64_t i, int64_t j, int64_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T& at(int64_t i, int64_t j, int64_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

 private:
  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

/// Builds a jagged tensor from per-sample lengths; offsets become the prefix
/// sum of lengths with a leading zero. Throws if the values buffer does not
/// hold exactly dim * sum(lengths) elements.
template <typename T>
JaggedTensor<T> make_jagged(std::span<const int64_t> lengths, std::vector<T> values,
                            int64_t dim);

template <typename T>
Jagged2Tensor<T> make_jagged2(std::span<const int64_t> seq_lengths, std::vector<T> values);

template <typename T>
std::vector<int64_t> segment_lengths(const JaggedTensor<T>& x);

/// Pads to [B, max_len, D]. Rows past each segment's end are pad_value;
/// segments longer than max_len are truncated.
template <typename T>
DenseTensor<T> jagged_to_dense(const JaggedTensor<T>& x, int64_t max_len, T pad_value);

/// Inverse of jagged_to_dense on the valid region. Throws if any
/// lengths[i] > max_len.
template <typename T>
JaggedTensor<T> dense_to_jagged(const DenseTensor<T>& d, std::span<const int64_t> lengths);

/// Blockwise analog of the rank-2 conversions for per-sample square blocks.
template <typename T>
DenseTensor<T> jagged2_to_dense(const Jagged2Tensor<T>& s, int64_t max_len, T pad_value);

template <typename T>
Jagged2Tensor<T> dense_to_jagged2(const DenseTensor<T>& d, std::span<const int64_t> lengths);

// Elementwise operations. Binary forms require identical offsets and dim;
// the result carries the left operand's offsets.
template <typename T>
JaggedTensor<T> add(const JaggedTensor<T>& a, const JaggedTensor<T>& b);
template <typename T>
JaggedTensor<T> sub(const JaggedTensor<T>& a, const JaggedTensor<T>& b);
template <typename T>
JaggedTensor<T> mul(const JaggedTensor<T>& a, const JaggedTensor<T>& b);
template <typename T>
JaggedTensor<T> scale(const JaggedTensor<T>& a, T s);
template <typename T>
Jagged2Tensor<T> scale(const Jagged2Tensor<T>& a, T s);

template <typename T, typename F>
JaggedTensor<T> map_unary(const JaggedTensor<T>& a, F&& f) {
  std::vector<T> out(a.values().size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = f(a.values()[k]);
  return JaggedTensor<T>(a.offsets(), std::move(out), a.dim());
}

}  // namespace jagged
