#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

namespace jagged {

/// Debug instrumentation for kernel-internal scratch buffers. Counts live
/// scratch elements (not bytes) across all threads and records the peak, so
/// tests can assert that fused kernels never materialize full score tensors.
class ScratchMeter {
 public:
  void on_alloc(int64_t elems) {
    const int64_t cur = current_.fetch_add(elems) + elems;
    int64_t peak = peak_.load();
    while (cur > peak && !peak_.compare_exchange_weak(peak, cur)) {
    }
  }
  void on_release(int64_t elems) { current_.fetch_sub(elems); }

  int64_t current() const { return current_.load(); }
  int64_t peak() const { return peak_.load(); }
  void reset() {
    current_.store(0);
    peak_.store(0);
  }

 private:
  std::atomic<int64_t> current_{0};
  std::atomic<int64_t> peak_{0};
};

/// RAII scratch allocation reported to an optional meter.
template <typename T>
class ScratchBuffer {
 public:
  ScratchBuffer(int64_t n, ScratchMeter* meter) : buf_(n), meter_(meter) {
    if (meter_) meter_->on_alloc(n);
  }
  ~ScratchBuffer() {
    if (meter_) meter_->on_release(static_cast<int64_t>(buf_.size()));
  }
  ScratchBuffer(const ScratchBuffer&) = delete;
  ScratchBuffer& operator=(const ScratchBuffer&) = delete;

  T* data() { return buf_.data(); }
  T& operator[](int64_t i) { return buf_[i]; }
  const T& operator[](int64_t i) const { return buf_[i]; }
  int64_t size() const { return static_cast<int64_t>(buf_.size()); }

 private:
  std::vector<T> buf_;
  ScratchMeter* meter_;
};

}  // namespace jagged
