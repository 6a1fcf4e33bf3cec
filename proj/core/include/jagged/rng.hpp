#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace jagged {

/// Seedable generator with a fully pinned algorithm so fixtures reproduce
/// across platforms: the raw stream is std::mt19937_64 (whose output sequence
/// the standard specifies exactly), bounded integers use the modulo method,
/// and reals use the top 53 bits of one draw.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);

  /// Uniform real in [lo, hi).
  double uniform_real(double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

enum class LengthKind { fixed, uniform, half_mean };

std::string to_string(LengthKind kind);
LengthKind parse_length_kind(const std::string& name);  // "fixed"|"uniform"|"half-mean"

/// Synthetic per-sample sequence-length generator for benchmark inputs.
///   fixed     : every length equals max_len.
///   uniform   : lengths ~ U{1, max_len}.
///   half_mean : antithetic uniform pairs (u, max_len - u) with u ~ U{0, max_len},
///               so the batch mean is max_len/2 exactly for even batch sizes and
///               within max_len/(2*batch) of it otherwise.
struct LengthDistribution {
  LengthKind kind = LengthKind::fixed;
  int64_t max_len = 1;
  uint64_t seed = 0;
};

std::vector<int64_t> gen_lengths(const LengthDistribution& dist, int64_t batch);

/// Buffer of n values uniform in [lo, hi); T is float or double.
template <typename T>
std::vector<T> uniform_values(Rng& rng, int64_t n, double lo, double hi);

}  // namespace jagged
