#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jagged/rng.hpp"

namespace jagged::bench {

enum class Precision { f32, f64 };
enum class ReportFormat { csv, json, md };

std::string to_string(Precision p);
Precision parse_precision(const std::string& name);
std::string to_string(ReportFormat f);
ReportFormat parse_report_format(const std::string& name);

/// Thrown when the jagged and padded implementations disagree before timing;
/// the message carries a diff summary.
class CrossCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  std::string op_id = "jagged_dense_bmm";
  int64_t batch = 256;
  int64_t dim = 64;
  int64_t t = 64;
  int64_t max_len = 256;
  std::vector<int64_t> grid;  // sweep grid; op run uses max_len
  LengthKind dist = LengthKind::half_mean;
  uint64_t seed = 0;
  Precision precision = Precision::f32;
  int64_t iterations = 20;
  int64_t warmup = 3;
  int threads = 1;
  int64_t block_q = 64;
  int64_t block_k = 64;
};

/// One timed implementation. `flops` and `bytes` are the analytic cost-model
/// numbers for this variant's own layout and algorithm; `checksum` is the sum
/// of the output's valid-region values in binary64.
struct VariantStats {
  std::string variant;
  double time_us_p50 = 0.0;
  double time_us_p10 = 0.0;
  double time_us_p90 = 0.0;
  int64_t flops = 0;
  int64_t bytes = 0;
  double checksum = 0.0;
  bool noisy = false;  // p90/p10 > 3 flags timing variance, never a failure
  double speedup_vs_dense = 1.0;
  double bytes_ratio_vs_dense = 1.0;
};

struct BenchRecord {
  std::string op_id;
  int64_t batch = 0;
  int64_t dim = 0;
  int64_t t = 0;
  int64_t max_len = 0;
  LengthKind dist = LengthKind::fixed;
  uint64_t seed = 0;
  Precision precision = Precision::f32;
  int threads = 1;
  int64_t flops_jagged = 0;
  int64_t flops_padded = 0;
  int64_t bytes_jagged = 0;
  int64_t bytes_padded = 0;
  std::vector<VariantStats> variants;
};

inline constexpr std::string_view kCsvHeader =
    "op,variant,B,D,T,max_len,dist,seed,precision,threads,time_us_p50,time_us_p10,"
    "time_us_p90,flops,bytes,speedup_vs_dense,bytes_ratio_vs_dense";

/// Generates seeded inputs, cross-checks the jagged implementation against
/// the padded one (rel tol 1e-4), then times both. Throws CrossCheckError if
/// the implementations disagree.
BenchRecord run_bench(const BenchConfig& cfg);

/// One record per (grid point x attention variant in {dense_attention,
/// dense_flash_attention, jagged_attention, jagged_flash_attention}).
std::vector<BenchRecord> run_sweep(const BenchConfig& cfg);

std::string render_report(std::span<const BenchRecord> records, ReportFormat fmt);

/// Inverse of render_report for the json format.
std::vector<BenchRecord> parse_records_json(std::string_view text);

}  // namespace jagged::bench
