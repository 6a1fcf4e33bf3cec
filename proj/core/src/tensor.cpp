#include "jagged/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace jagged {

namespace {

int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t p = 1;
  for (int64_t s : shape) p *= s;
  return p;
}

}  // namespace

template <typename T>
JaggedTensor<T>::JaggedTensor(std::vector<int64_t> offsets, std::vector<T> values,
                              int64_t dim)
    : dim_(dim), offsets_(std::move(offsets)), values_(std::move(values)) {
  if (dim_ <= 0) throw std::invalid_argument("JaggedTensor: dim must be positive");
  if (offsets_.empty() || offsets_.front() != 0)
    throw std::invalid_argument("JaggedTensor: offsets must start with 0");
  for (size_t i = 1; i < offsets_.size(); ++i) {
    if (offsets_[i] < offsets_[i - 1])
      throw std::invalid_argument("JaggedTensor: offsets must be non-decreasing at index " +
                                  std::to_string(i));
  }
  const int64_t expected = offsets_.back() * dim_;
  if (expected != static_cast<int64_t>(values_.size()))
    throw std::invalid_argument("JaggedTensor: expected " + std::to_string(expected) +
                                " value elements, got " + std::to_string(values_.size()));
}

template <typename T>
Jagged2Tensor<T>::Jagged2Tensor(std::vector<int64_t> seq_lengths, std::vector<T> values)
    : seq_lengths_(std::move(seq_lengths)), values_(std::move(values)) {
  sq_offsets_.resize(seq_lengths_.size() + 1);
  sq_offsets_[0] = 0;
  for (size_t i = 0; i < seq_lengths_.size(); ++i) {
    const int64_t n = seq_lengths_[i];
    if (n < 0)
      throw std::invalid_argument("Jagged2Tensor: negative length at sample " +
                                  std::to_string(i));
    sq_offsets_[i + 1] = sq_offsets_[i] + n * n;
  }
  if (sq_offsets_.back() != static_cast<int64_t>(values_.size()))
    throw std::invalid_argument("Jagged2Tensor: expected " + std::to_string(sq_offsets_.back()) +
                                " value elements, got " + std::to_string(values_.size()));
}

template <typename T>
DenseTensor<T>::DenseTensor(std::vector<int64_t> shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() != 2 && shape_.size() != 3)
    throw std::invalid_argument("DenseTensor: rank must be 2 or 3");
  for (int64_t s : shape_)
    if (s < 0) throw std::invalid_argument("DenseTensor: negative dimension");
  if (shape_product(shape_) != static_cast<int64_t>(data_.size()))
    throw std::invalid_argument("DenseTensor: expected " + std::to_string(shape_product(shape_)) +
                                " data elements, got " + std::to_string(data_.size()));
}

template <typename T>
DenseTensor<T> DenseTensor<T>::zeros(std::vector<int64_t> shape) {
  const int64_t n = shape_product(shape);
  return DenseTensor<T>(std::move(shape), std::vector<T>(n, T(0)));
}

template <typename T>
JaggedTensor<T> make_jagged(std::span<const int64_t> lengths, std::vector<T> values,
                            int64_t dim) {
  std::vector<int64_t> offsets(lengths.size() + 1);
  offsets[0] = 0;
  for (size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 0)
      throw std::invalid_argument("make_jagged: negative length at sample " + std::to_string(i));
    offsets[i + 1] = offsets[i] + lengths[i];
  }
  const int64_t expected = offsets.back() * dim;
  if (expected != static_cast<int64_t>(values.size()))
    throw std::invalid_argument("make_jagged: expected " + std::to_string(expected) +
                                " value elements, got " + std::to_string(values.size()));
  return JaggedTensor<T>(std::move(offsets), std::move(values), dim);
}

template <typename T>
Jagged2Tensor<T> make_jagged2(std::span<const int64_t> seq_lengths, std::vector<T> values) {
  return Jagged2Tensor<T>(std::vector<int64_t>(seq_lengths.begin(), seq_lengths.end()),
                          std::move(values));
}

template <typename T>
std::vector<int64_t> segment_lengths(const JaggedTensor<T>& x) {
  std::vector<int64_t> lengths(x.batch());
  for (int64_t i = 0; i < x.batch(); ++i) lengths[i] = x.length(i);
  return lengths;
}

template <typename T>
DenseTensor<T> jagged_to_dense(const JaggedTensor<T>& x, int64_t max_len, T pad_value) {
  if (max_len < 0) throw std::invalid_argument("jagged_to_dense: max_len must be >= 0");
  const int64_t b = x.batch(), d = x.dim();
  std::vector<T> out(static_cast<size_t>(b * max_len * d), pad_value);
  for (int64_t i = 0; i < b; ++i) {
    const int64_t n = std::min(x.length(i), max_len);
    for (int64_t j = 0; j < n; ++j) {
      const T* src = x.row(x.offset(i) + j);
      T* dst = out.data() + (i * max_len + j) * d;
      std::copy(src, src + d, dst);
    }
  }
  return DenseTensor<T>({b, max_len, d}, std::move(out));
}

template <typename T>
JaggedTensor<T> dense_to_jagged(const DenseTensor<T>& d, std::span<const int64_t> lengths) {
  if (d.rank() != 3) throw std::invalid_argument("dense_to_jagged: rank-3 input required");
  const int64_t b = d.shape()[0], max_len = d.shape()[1], dim = d.shape()[2];
  if (static_cast<int64_t>(lengths.size()) != b)
    throw std::invalid_argument("dense_to_jagged: lengths size mismatch");
  int64_t total = 0;
  for (size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] > max_len)
      throw std::invalid_argument("dense_to_jagged: sample " + std::to_string(i) + " length " +
                                  std::to_string(lengths[i]) + " exceeds max_len " +
                                  std::to_string(max_len));
    total += lengths[i];
  }
  std::vector<T> values;
  values.reserve(static_cast<size_t>(total * dim));
  for (int64_t i = 0; i < b; ++i) {
    const T* base = d.data().data() + i * max_len * dim;
    values.insert(values.end(), base, base + lengths[i] * dim);
  }
  return make_jagged(lengths, std::move(values), dim);
}

template <typename T>
DenseTensor<T> jagged2_to_dense(const Jagged2Tensor<T>& s, int64_t max_len, T pad_value) {
  if (max_len < 0) throw std::invalid_argument("jagged2_to_dense: max_len must be >= 0");
  const int64_t b = s.batch();
  std::vector<T> out(static_cast<size_t>(b * max_len * max_len), pad_value);
  for (int64_t i = 0; i < b; ++i) {
    const int64_t n = std::min(s.length(i), max_len);
    const T* blk = s.block(i);
    const int64_t bi = s.length(i);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < n; ++c)
        out[(i * max_len + r) * max_len + c] = blk[r * bi + c];
  }
  return DenseTensor<T>({b, max_len, max_len}, std::move(out));
}

template <typename T>
Jagged2Tensor<T> dense_to_jagged2(const DenseTensor<T>& d, std::span<const int64_t> lengths) {
  if (d.rank() != 3 || d.shape()[1] != d.shape()[2])
    throw std::invalid_argument("dense_to_jagged2: [B, L, L] input required");
  const int64_t b = d.shape()[0], max_len = d.shape()[1];
  if (static_cast<int64_t>(lengths.size()) != b)
    throw std::invalid_argument("dense_to_jagged2: lengths size mismatch");
  std::vector<T> values;
  for (int64_t i = 0; i < b; ++i) {
    const int64_t n = lengths[i];
    if (n > max_len)
      throw std::invalid_argument("dense_to_jagged2: sample " + std::to_string(i) + " length " +
                                  std::to_string(n) + " exceeds max_len " +
                                  std::to_string(max_len));
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < n; ++c) values.push_back(d.at(i, r, c));
  }
  return make_jagged2(lengths, std::move(values));
}

namespace {

template <typename T>
void require_same_layout(const JaggedTensor<T>& a, const JaggedTensor<T>& b, const char* op) {
  if (a.dim() != b.dim())
    throw std::invalid_argument(std::string(op) + ": dim mismatch (" + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()) + ")");
  if (a.batch() != b.batch())
    throw std::invalid_argument(std::string(op) + ": batch mismatch (" +
                                std::to_string(a.batch()) + " vs " + std::to_string(b.batch()) +
                                ")");
  for (int64_t i = 0; i < a.batch(); ++i) {
    if (a.length(i) != b.length(i))
      throw std::invalid_argument(std::string(op) + ": offsets differ first at sample " +
                                  std::to_string(i));
  }
}

template <typename T, typename F>
JaggedTensor<T> zip_values(const JaggedTensor<T>& a, const JaggedTensor<T>& b, const char* op,
                           F&& f) {
  require_same_layout(a, b, op);
  std::vector<T> out(a.values().size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = f(a.values()[k], b.values()[k]);
  return JaggedTensor<T>(a.offsets(), std::move(out), a.dim());
}

}  // namespace

template <typename T>
JaggedTensor<T> add(const JaggedTensor<T>& a, const JaggedTensor<T>& b) {
  return zip_values(a, b, "add", [](T x, T y) { return x + y; });
}

template <typename T>
JaggedTensor<T> sub(const JaggedTensor<T>& a, const JaggedTensor<T>& b) {
  return zip_values(a, b, "sub", [](T x, T y) { return x - y; });
}

template <typename T>
JaggedTensor<T> mul(const JaggedTensor<T>& a, const JaggedTensor<T>& b) {
  return zip_values(a, b, "mul", [](T x, T y) { return x * y; });
}

template <typename T>
JaggedTensor<T> scale(const JaggedTensor<T>& a, T s) {
  std::vector<T> out(a.values().size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = a.values()[k] * s;
  return JaggedTensor<T>(a.offsets(), std::move(out), a.dim());
}

template <typename T>
Jagged2Tensor<T> scale(const Jagged2Tensor<T>& a, T s) {
  std::vector<T> out(a.values().size());
  for (size_t k = 0; k < out.size(); ++k) out[k] = a.values()[k] * s;
  return Jagged2Tensor<T>(a.seq_lengths(), std::move(out));
}

#define JAGGED_INSTANTIATE_TENSOR(T)                                                         \
  template class JaggedTensor<T>;                                                            \
  template class Jagged2Tensor<T>;                                                           \
  template class DenseTensor<T>;                                                             \
  template JaggedTensor<T> make_jagged(std::span<const int64_t>, std::vector<T>, int64_t);   \
  template Jagged2Tensor<T> make_jagged2(std::span<const int64_t>, std::vector<T>);          \
  template std::vector<int64_t> segment_lengths(const JaggedTensor<T>&);                     \
  template DenseTensor<T> jagged_to_dense(const JaggedTensor<T>&, int64_t, T);               \
  template JaggedTensor<T> dense_to_jagged(const DenseTensor<T>&, std::span<const int64_t>); \
  template DenseTensor<T> jagged2_to_dense(const Jagged2Tensor<T>&, int64_t, T);             \
  template Jagged2Tensor<T> dense_to_jagged2(const DenseTensor<T>&,                          \
                                             std::span<const int64_t>);                     \
  template JaggedTensor<T> add(const JaggedTensor<T>&, const JaggedTensor<T>&);              \
  template JaggedTensor<T> sub(const JaggedTensor<T>&, const JaggedTensor<T>&);              \
  template JaggedTensor<T> mul(const JaggedTensor<T>&, const JaggedTensor<T>&);              \
  template JaggedTensor<T> scale(const JaggedTensor<T>&, T);                                 \
  template Jagged2Tensor<T> scale(const Jagged2Tensor<T>&, T);

JAGGED_INSTANTIATE_TENSOR(float)
JAGGED_INSTANTIATE_TENSOR(double)

#undef JAGGED_INSTANTIATE_TENSOR

}  // namespace jagged
