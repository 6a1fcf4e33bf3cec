#include "jagged/rng.hpp"

#include <stdexcept>

namespace jagged {

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
  return lo + static_cast<int64_t>(next_u64() % span);
}

double Rng::uniform_real(double lo, double hi) {
  const double unit = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

std::string to_string(LengthKind kind) {
  switch (kind) {
    case LengthKind::fixed: return "fixed";
    case LengthKind::uniform: return "uniform";
    case LengthKind::half_mean: return "half-mean";
  }
  return "?";
}

LengthKind parse_length_kind(const std::string& name) {
  if (name == "fixed") return LengthKind::fixed;
  if (name == "uniform") return LengthKind::uniform;
  if (name == "half-mean" || name == "half_mean") return LengthKind::half_mean;
  throw std::invalid_argument("unknown length distribution: " + name);
}

std::vector<int64_t> gen_lengths(const LengthDistribution& dist, int64_t batch) {
  if (batch < 1) throw std::invalid_argument("gen_lengths: batch must be >= 1");
  if (dist.max_len < 1) throw std::invalid_argument("gen_lengths: max_len must be >= 1");
  std::vector<int64_t> lengths(batch);
  Rng rng(dist.seed);
  switch (dist.kind) {
    case LengthKind::fixed:
      for (auto& l : lengths) l = dist.max_len;
      break;
    case LengthKind::uniform:
      for (auto& l : lengths) l = rng.uniform_int(1, dist.max_len);
      break;
    case LengthKind::half_mean:
      for (int64_t i = 0; i + 1 < batch; i += 2) {
        const int64_t u = rng.uniform_int(0, dist.max_len);
        lengths[i] = u;
        lengths[i + 1] = dist.max_len - u;
      }
      if (batch % 2 == 1) lengths[batch - 1] = rng.uniform_int(0, dist.max_len);
      break;
  }
  return lengths;
}

template <typename T>
std::vector<T> uniform_values(Rng& rng, int64_t n, double lo, double hi) {
  std::vector<T> out(n);
  for (auto& v : out) v = static_cast<T>(rng.uniform_real(lo, hi));
  return out;
}

template std::vector<float> uniform_values<float>(Rng&, int64_t, double, double);
template std::vector<double> uniform_values<double>(Rng&, int64_t, double, double);

}  // namespace jagged
