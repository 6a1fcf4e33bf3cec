#include "jagged/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "jagged/attention.hpp"
#include "jagged/cost_model.hpp"
#include "jagged/linalg.hpp"
#include "jagged/padded_ops.hpp"
#include "jagged/tensor.hpp"

namespace jagged::bench {

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& name) {
  if (name == "f32") return Precision::f32;
  if (name == "f64") return Precision::f64;
  throw std::invalid_argument("unknown precision: " + name);
}

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::md: return "md";
  }
  return "?";
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "md") return ReportFormat::md;
  throw std::invalid_argument("unknown report format: " + name);
}

namespace {

constexpr double kCrossCheckTol = 1e-4;

struct PreparedVariant {
  std::string name;
  std::function<double()> run;  // full evaluation, returns output checksum
};

struct Prepared {
  std::vector<PreparedVariant> variants;      // [0] is the padded/dense baseline
  std::function<void(const std::string&)> crosscheck;  // throws CrossCheckError
};

struct Diff {
  double max_rel = 0.0;
  std::string where;
  double lhs = 0.0, rhs = 0.0;

  void update(double a, double b, int64_t sample, int64_t row, int64_t col) {
    const double rel =
        std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
    if (rel > max_rel) {
      max_rel = rel;
      lhs = a;
      rhs = b;
      where = "sample " + std::to_string(sample) + " [" + std::to_string(row) + "," +
              std::to_string(col) + "]";
    }
  }

  void require_below(double tol, const std::string& op, const std::string& what) const {
    if (max_rel > tol) {
      std::ostringstream ss;
      ss << op << ": " << what << " diverge before timing: max rel err " << max_rel << " at "
         << where << " (jagged=" << lhs << ", padded=" << rhs << ", tol " << tol << ")";
      throw CrossCheckError(ss.str());
    }
  }
};

// --- checksums over valid regions (binary64 sums) ---

template <typename T>
double checksum_all(const std::vector<T>& values) {
  double acc = 0.0;
  for (const T& v : values) acc += static_cast<double>(v);
  return acc;
}

template <typename T>
double checksum_jagged(const JaggedTensor<T>& x) {
  return checksum_all(x.values());
}

template <typename T>
double checksum_jagged2(const Jagged2Tensor<T>& x) {
  return checksum_all(x.values());
}

template <typename T>
double checksum_dense(const DenseTensor<T>& x) {
  return checksum_all(x.data());
}

// Padded [B, L, D] restricted to rows below each sample's length.
template <typename T>
double checksum_padded_rows(const DenseTensor<T>& x, std::span<const int64_t> lengths) {
  double acc = 0.0;
  const int64_t d = x.shape()[2];
  for (int64_t i = 0; i < x.shape()[0]; ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t c = 0; c < d; ++c) acc += static_cast<double>(x.at(i, r, c));
  return acc;
}

// Padded [B, L, L] restricted to each sample's Bi x Bi block.
template <typename T>
double checksum_padded_blocks(const DenseTensor<T>& x, std::span<const int64_t> lengths) {
  double acc = 0.0;
  for (int64_t i = 0; i < x.shape()[0]; ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t c = 0; c < lengths[i]; ++c) acc += static_cast<double>(x.at(i, r, c));
  return acc;
}

// --- valid-region diffs ---

template <typename T>
Diff diff_jagged_vs_padded_rows(const JaggedTensor<T>& j, const DenseTensor<T>& p,
                                std::span<const int64_t> lengths) {
  Diff diff;
  const int64_t d = j.dim();
  for (int64_t i = 0; i < j.batch(); ++i)
    for (int64_t r = 0; r < lengths[i]; ++r)
      for (int64_t c = 0; c < d; ++c)
        diff.update(static_cast<double>(j.row(j.offset(i) + r)[c]),
                    static_cast<double>(p.at(i, r, c)), i, r, c);
  return diff;
}

template <typename T>
Diff diff_jagged2_vs_padded_blocks(const Jagged2Tensor<T>& j, const DenseTensor<T>& p,
                                   std::span<const int64_t> lengths) {
  Diff diff;
  for (int64_t i = 0; i < j.batch(); ++i) {
    const int64_t n = lengths[i];
    const T* blk = j.block(i);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < n; ++c)
        diff.update(static_cast<double>(blk[r * n + c]), static_cast<double>(p.at(i, r, c)), i,
                    r, c);
  }
  return diff;
}

template <typename T>
Diff diff_dense(const DenseTensor<T>& a, const DenseTensor<T>& b) {
  Diff diff;
  const auto& da = a.data();
  const auto& db = b.data();
  for (size_t k = 0; k < da.size(); ++k)
    diff.update(static_cast<double>(da[k]), static_cast<double>(db[k]), 0,
                static_cast<int64_t>(k), 0);
  return diff;
}

template <typename T>
Diff diff_jagged_vs_jagged(const JaggedTensor<T>& a, const JaggedTensor<T>& b) {
  Diff diff;
  for (int64_t i = 0; i < a.batch(); ++i)
    for (int64_t r = 0; r < a.length(i); ++r)
      for (int64_t c = 0; c < a.dim(); ++c)
        diff.update(static_cast<double>(a.row(a.offset(i) + r)[c]),
                    static_cast<double>(b.row(b.offset(i) + r)[c]), i, r, c);
  return diff;
}

// --- per-op preparation ---

template <typename T>
Prepared prepare_table_op(const BenchConfig& cfg, const std::vector<int64_t>& lengths) {
  const int64_t b = cfg.batch, d = cfg.dim, t = cfg.t, l = cfg.max_len;
  const KernelOptions kopts{64, cfg.threads, nullptr};
  Rng rng(cfg.seed + 1);
  const double neg_inf = -std::numeric_limits<double>::infinity();

  int64_t sum_len = 0, sum_sq = 0;
  for (int64_t n : lengths) {
    sum_len += n;
    sum_sq += n * n;
  }

  Prepared prep;
  const std::string& op = cfg.op_id;

  if (op == "jagged_dense_bmm") {
    const auto x = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    const auto w = DenseTensor<T>({b, d, t}, uniform_values<T>(rng, b * d * t, -1, 1));
    const auto xp = jagged_to_dense(x, l, T(0));
    prep.variants = {
        {"padded",
         [=] { return checksum_padded_rows(padded::jagged_dense_bmm(xp, w, kopts), lengths); }},
        {"jagged", [=] { return checksum_jagged(jagged_dense_bmm(x, w, kopts)); }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_jagged_vs_padded_rows(jagged_dense_bmm(x, w, kopts),
                                 padded::jagged_dense_bmm(xp, w, kopts), lengths)
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else if (op == "jagged_jagged_bmm") {
    const auto x = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    const auto y = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * t, -1, 1), t);
    const auto xp = jagged_to_dense(x, l, T(0));
    const auto yp = jagged_to_dense(y, l, T(0));
    prep.variants = {
        {"padded",
         [=] { return checksum_dense(padded::jagged_jagged_bmm(xp, yp, kopts)); }},
        {"jagged", [=] { return checksum_dense(jagged_jagged_bmm(x, y, kopts)); }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_dense(jagged_jagged_bmm(x, y, kopts), padded::jagged_jagged_bmm(xp, yp, kopts))
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else if (op == "jagged_softmax") {
    const auto x = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    const auto xp = jagged_to_dense(x, l, static_cast<T>(neg_inf));
    prep.variants = {
        {"padded",
         [=] { return checksum_padded_rows(padded::jagged_softmax(xp, kopts), lengths); }},
        {"jagged", [=] { return checksum_jagged(jagged_softmax(x, kopts)); }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_jagged_vs_padded_rows(jagged_softmax(x, kopts), padded::jagged_softmax(xp, kopts),
                                 lengths)
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else if (op == "jagged_jagged_bmm_jagged_out") {
    const auto q = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    const auto k = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    const auto qp = jagged_to_dense(q, l, T(0));
    const auto kp = jagged_to_dense(k, l, T(0));
    prep.variants = {{"padded",
                      [=] {
                        return checksum_padded_blocks(
                            padded::jagged_jagged_bmm_jagged_out(qp, kp, kopts), lengths);
                      }},
                     {"jagged", [=] {
                        return checksum_jagged2(jagged_jagged_bmm_jagged_out(q, k, kopts));
                      }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_jagged2_vs_padded_blocks(jagged_jagged_bmm_jagged_out(q, k, kopts),
                                    padded::jagged_jagged_bmm_jagged_out(qp, kp, kopts), lengths)
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else if (op == "array_jagged_bmm_jagged_out") {
    const auto a = make_jagged2<T>(lengths, uniform_values<T>(rng, sum_sq, -1, 1));
    const auto v = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    const auto ap = jagged2_to_dense(a, l, T(0));
    const auto vp = jagged_to_dense(v, l, T(0));
    prep.variants = {{"padded",
                      [=] {
                        return checksum_padded_rows(
                            padded::array_jagged_bmm_jagged_out(ap, vp, kopts), lengths);
                      }},
                     {"jagged", [=] {
                        return checksum_jagged(array_jagged_bmm_jagged_out(a, v, kopts));
                      }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_jagged_vs_padded_rows(array_jagged_bmm_jagged_out(a, v, kopts),
                                 padded::array_jagged_bmm_jagged_out(ap, vp, kopts), lengths)
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else if (op == "jagged2_softmax") {
    const auto s = make_jagged2<T>(lengths, uniform_values<T>(rng, sum_sq, -1, 1));
    const auto sp = jagged2_to_dense(s, l, static_cast<T>(neg_inf));
    prep.variants = {
        {"padded",
         [=] { return checksum_padded_blocks(padded::jagged2_softmax(sp, kopts), lengths); }},
        {"jagged", [=] { return checksum_jagged2(jagged2_softmax(s, kopts)); }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_jagged2_vs_padded_blocks(jagged2_softmax(s, kopts),
                                    padded::jagged2_softmax(sp, kopts), lengths)
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else if (op == "jagged_mlp") {
    const auto x = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
    // The benchable MLP: D -> T with relu, then T -> D.
    std::vector<MlpLayer<T>> layers;
    layers.push_back({DenseTensor<T>({d, t}, uniform_values<T>(rng, d * t, -1, 1)),
                      uniform_values<T>(rng, t, -1, 1), Activation::relu});
    layers.push_back({DenseTensor<T>({t, d}, uniform_values<T>(rng, t * d, -1, 1)),
                      uniform_values<T>(rng, d, -1, 1), Activation::none});
    const auto xp = jagged_to_dense(x, l, T(0));
    prep.variants = {
        {"padded",
         [=] {
           return checksum_padded_rows(
               padded::jagged_mlp<T>(xp, std::span<const MlpLayer<T>>(layers), kopts), lengths);
         }},
        {"jagged", [=] {
           return checksum_jagged(
               jagged_mlp<T>(x, std::span<const MlpLayer<T>>(layers), kopts));
         }}};
    prep.crosscheck = [=](const std::string& id) {
      diff_jagged_vs_padded_rows(
          jagged_mlp<T>(x, std::span<const MlpLayer<T>>(layers), kopts),
          padded::jagged_mlp<T>(xp, std::span<const MlpLayer<T>>(layers), kopts), lengths)
          .require_below(kCrossCheckTol, id, "jagged/padded outputs");
    };
  } else {
    throw std::invalid_argument("run_bench: unknown or unbenchable op '" + op + "'");
  }
  return prep;
}

// The four attention variants over shared inputs; [0] is dense naive.
template <typename T>
Prepared prepare_attention(const BenchConfig& cfg, const std::vector<int64_t>& lengths,
                           bool all_four) {
  const int64_t d = cfg.dim, l = cfg.max_len;
  const KernelOptions kopts{64, cfg.threads, nullptr};
  Rng rng(cfg.seed + 1);
  int64_t sum_len = 0;
  for (int64_t n : lengths) sum_len += n;

  const auto q = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
  const auto k = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
  const auto v = make_jagged<T>(lengths, uniform_values<T>(rng, sum_len * d, -1, 1), d);
  const auto qp = jagged_to_dense(q, l, T(0));
  const auto kp = jagged_to_dense(k, l, T(0));
  const auto vp = jagged_to_dense(v, l, T(0));
  const int64_t bq = cfg.block_q, bk = cfg.block_k;

  PreparedVariant dense_naive{
      "dense_attention",
      [=] { return checksum_padded_rows(dense_attention(qp, kp, vp, lengths, kopts), lengths); }};
  PreparedVariant dense_flash{"dense_flash_attention", [=] {
                                return checksum_padded_rows(
                                    dense_flash_attention(qp, kp, vp, lengths, bq, bk, kopts)
                                        .output,
                                    lengths);
                              }};
  PreparedVariant jag_naive{"jagged_attention",
                            [=] { return checksum_jagged(jagged_attention(q, k, v, kopts)); }};
  PreparedVariant jag_flash{"jagged_flash_attention", [=] {
                              return checksum_jagged(
                                  jagged_flash_attention_forward(q, k, v, bq, bk, kopts).output);
                            }};

  Prepared prep;
  const bool flash_family = cfg.op_id == "dense_flash_attention" ||
                            cfg.op_id == "jagged_flash_attention";
  if (all_four)
    prep.variants = {dense_naive, dense_flash, jag_naive, jag_flash};
  else if (flash_family)
    prep.variants = {dense_flash, jag_flash};
  else
    prep.variants = {dense_naive, jag_naive};

  prep.crosscheck = [=](const std::string& id) {
    const auto baseline = dense_attention(qp, kp, vp, lengths, kopts);
    diff_jagged_vs_padded_rows(jagged_attention(q, k, v, kopts), baseline, lengths)
        .require_below(kCrossCheckTol, id, "jagged_attention vs dense_attention");
    diff_jagged_vs_padded_rows(jagged_flash_attention_forward(q, k, v, bq, bk, kopts).output,
                               baseline, lengths)
        .require_below(kCrossCheckTol, id, "jagged_flash_attention vs dense_attention");
    diff_dense(dense_flash_attention(qp, kp, vp, lengths, bq, bk, kopts).output, baseline)
        .require_below(kCrossCheckTol, id, "dense_flash_attention vs dense_attention");
  };
  return prep;
}

bool is_attention_id(const std::string& op) {
  return op == "dense_attention" || op == "dense_flash_attention" ||
         op == "jagged_attention" || op == "jagged_flash_attention";
}

double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  if (xs.empty()) return 0.0;
  const double pos = q * static_cast<double>(xs.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + (xs[hi] - xs[lo]) * frac;
}

VariantStats time_variant(const PreparedVariant& v, const BenchConfig& cfg) {
  VariantStats stats;
  stats.variant = v.name;
  stats.checksum = v.run();
  for (int64_t i = 0; i < cfg.warmup; ++i) v.run();
  std::vector<double> times_us;
  times_us.reserve(cfg.iterations);
  for (int64_t i = 0; i < cfg.iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    v.run();
    const auto t1 = std::chrono::steady_clock::now();
    times_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  stats.time_us_p50 = percentile(times_us, 0.5);
  stats.time_us_p10 = percentile(times_us, 0.1);
  stats.time_us_p90 = percentile(times_us, 0.9);
  stats.noisy = stats.time_us_p10 > 0.0 ? stats.time_us_p90 / stats.time_us_p10 > 3.0
                                        : stats.time_us_p90 > 0.0;
  return stats;
}

OpConfig cost_config(const BenchConfig& cfg, const std::vector<int64_t>& lengths,
                     int64_t max_len, const std::string& op_id) {
  OpConfig c;
  c.op_id = op_id;
  c.batch = cfg.batch;
  c.dim = cfg.dim;
  c.t = cfg.t;
  c.lengths = lengths;
  c.element_bytes = cfg.precision == Precision::f32 ? 4 : 8;
  c.padded_len = max_len;
  c.block_q = cfg.block_q;
  c.block_k = cfg.block_k;
  return c;
}

BenchRecord make_record(const BenchConfig& cfg, int64_t max_len,
                        const std::vector<int64_t>& lengths, const std::string& op_id) {
  BenchRecord rec;
  rec.op_id = op_id;
  rec.batch = cfg.batch;
  rec.dim = cfg.dim;
  rec.t = cfg.t;
  rec.max_len = max_len;
  rec.dist = cfg.dist;
  rec.seed = cfg.seed;
  rec.precision = cfg.precision;
  rec.threads = cfg.threads;
  const OpConfig cc = cost_config(cfg, lengths, max_len, op_id);
  const auto [fj, fp] = flops_of(cc);
  const auto [bj, bp] = bytes_of(cc);
  rec.flops_jagged = fj;
  rec.flops_padded = fp;
  rec.bytes_jagged = bj;
  rec.bytes_padded = bp;
  return rec;
}

template <typename T>
BenchRecord run_bench_impl(const BenchConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("run_bench: iterations must be >= 1");
  if (cfg.warmup < 0) throw std::invalid_argument("run_bench: warmup must be >= 0");
  const std::vector<int64_t> lengths =
      gen_lengths({cfg.dist, cfg.max_len, cfg.seed}, cfg.batch);

  Prepared prep = is_attention_id(cfg.op_id)
                      ? prepare_attention<T>(cfg, lengths, /*all_four=*/false)
                      : prepare_table_op<T>(cfg, lengths);
  prep.crosscheck(cfg.op_id);

  BenchRecord rec = make_record(cfg, cfg.max_len, lengths, cfg.op_id);
  const OpConfig cc = cost_config(cfg, lengths, cfg.max_len, cfg.op_id);
  for (const auto& variant : prep.variants) {
    VariantStats stats = time_variant(variant, cfg);
    stats.flops = variant_flops(cc, stats.variant);
    stats.bytes = variant_bytes(cc, stats.variant);
    rec.variants.push_back(std::move(stats));
  }
  const VariantStats& base = rec.variants.front();
  for (auto& stats : rec.variants) {
    stats.speedup_vs_dense = stats.time_us_p50 > 0.0 ? base.time_us_p50 / stats.time_us_p50 : 1.0;
    stats.bytes_ratio_vs_dense =
        base.bytes > 0 ? static_cast<double>(stats.bytes) / static_cast<double>(base.bytes) : 1.0;
  }
  return rec;
}

template <typename T>
std::vector<BenchRecord> run_sweep_impl(const BenchConfig& cfg) {
  if (cfg.grid.empty()) throw std::invalid_argument("run_sweep: empty max_len grid");
  std::vector<BenchRecord> records;
  for (int64_t g : cfg.grid) {
    BenchConfig point = cfg;
    point.max_len = g;
    const std::vector<int64_t> lengths = gen_lengths({cfg.dist, g, cfg.seed}, cfg.batch);
    Prepared prep = prepare_attention<T>(point, lengths, /*all_four=*/true);
    prep.crosscheck("attention sweep @ max_len=" + std::to_string(g));

    std::vector<VariantStats> stats;
    for (const auto& variant : prep.variants) stats.push_back(time_variant(variant, point));
    const OpConfig naive_cc = cost_config(point, lengths, g, "dense_attention");
    const int64_t dense_bytes = variant_bytes(naive_cc, "dense_attention");
    const double dense_p50 = stats.front().time_us_p50;

    for (auto& s : stats) {
      BenchRecord rec = make_record(point, g, lengths, s.variant);
      rec.op_id = "attention";
      const OpConfig cc = cost_config(point, lengths, g, s.variant);
      s.flops = variant_flops(cc, s.variant);
      s.bytes = variant_bytes(cc, s.variant);
      s.speedup_vs_dense = s.time_us_p50 > 0.0 ? dense_p50 / s.time_us_p50 : 1.0;
      s.bytes_ratio_vs_dense =
          dense_bytes > 0 ? static_cast<double>(s.bytes) / static_cast<double>(dense_bytes) : 1.0;
      rec.variants.push_back(s);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// --- rendering ---

std::string format_double(double v, int precision = 6) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

std::string format_fixed(double v, int decimals) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(decimals);
  ss << v;
  return ss.str();
}

std::string render_csv(std::span<const BenchRecord> records) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& rec : records) {
    for (const auto& v : rec.variants) {
      out << rec.op_id << ',' << v.variant << ',' << rec.batch << ',' << rec.dim << ','
          << rec.t << ',' << rec.max_len << ',' << jagged::to_string(rec.dist) << ','
          << rec.seed << ',' << to_string(rec.precision) << ',' << rec.threads << ','
          << format_fixed(v.time_us_p50, 3) << ',' << format_fixed(v.time_us_p10, 3) << ','
          << format_fixed(v.time_us_p90, 3) << ',' << v.flops << ',' << v.bytes << ','
          << format_double(v.speedup_vs_dense) << ',' << format_double(v.bytes_ratio_vs_dense)
          << "\n";
    }
  }
  return out.str();
}

nlohmann::json record_to_json(const BenchRecord& rec) {
  nlohmann::json j;
  j["op"] = rec.op_id;
  j["B"] = rec.batch;
  j["D"] = rec.dim;
  j["T"] = rec.t;
  j["max_len"] = rec.max_len;
  j["dist"] = jagged::to_string(rec.dist);
  j["seed"] = rec.seed;
  j["precision"] = to_string(rec.precision);
  j["threads"] = rec.threads;
  j["flops_jagged"] = rec.flops_jagged;
  j["flops_padded"] = rec.flops_padded;
  j["bytes_jagged"] = rec.bytes_jagged;
  j["bytes_padded"] = rec.bytes_padded;
  j["variants"] = nlohmann::json::array();
  for (const auto& v : rec.variants) {
    nlohmann::json vj;
    vj["variant"] = v.variant;
    vj["time_us_p50"] = v.time_us_p50;
    vj["time_us_p10"] = v.time_us_p10;
    vj["time_us_p90"] = v.time_us_p90;
    vj["flops"] = v.flops;
    vj["bytes"] = v.bytes;
    vj["checksum"] = v.checksum;
    vj["noisy"] = v.noisy;
    vj["speedup_vs_dense"] = v.speedup_vs_dense;
    vj["bytes_ratio_vs_dense"] = v.bytes_ratio_vs_dense;
    j["variants"].push_back(std::move(vj));
  }
  return j;
}

std::string render_json(std::span<const BenchRecord> records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : records) arr.push_back(record_to_json(rec));
  return arr.dump(2);
}

std::string ratio_annotation(double ratio) {
  return " (" + format_fixed(ratio, 2) + "\xC3\x97)";  // multiplication sign
}

std::string render_md(std::span<const BenchRecord> records) {
  std::ostringstream out;
  out << "| op | variant | B | D | T | max_len | time_us (p50) | FLOPs (M) | memory (MB) |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& rec : records) {
    for (size_t vi = 0; vi < rec.variants.size(); ++vi) {
      const auto& v = rec.variants[vi];
      const bool baseline = v.variant == rec.variants.front().variant && vi == 0 &&
                            v.speedup_vs_dense == 1.0 && v.bytes_ratio_vs_dense == 1.0;
      std::string time_cell = format_fixed(v.time_us_p50, 1);
      std::string flops_cell = format_fixed(static_cast<double>(v.flops) / 1e6, 1);
      std::string bytes_cell = format_fixed(static_cast<double>(v.bytes) / 1e6, 1);
      if (!baseline) {
        time_cell += ratio_annotation(v.speedup_vs_dense);
        if (v.flops > 0)
          flops_cell += ratio_annotation(static_cast<double>(rec.flops_padded) /
                                         static_cast<double>(v.flops));
        if (v.bytes > 0)
          bytes_cell += ratio_annotation(static_cast<double>(rec.bytes_padded) /
                                         static_cast<double>(v.bytes));
      }
      out << "| " << rec.op_id << " | " << v.variant << " | " << rec.batch << " | " << rec.dim
          << " | " << rec.t << " | " << rec.max_len << " | " << time_cell << " | " << flops_cell
          << " | " << bytes_cell << " |\n";
    }
  }
  return out.str();
}

}  // namespace

BenchRecord run_bench(const BenchConfig& cfg) {
  return cfg.precision == Precision::f32 ? run_bench_impl<float>(cfg)
                                         : run_bench_impl<double>(cfg);
}

std::vector<BenchRecord> run_sweep(const BenchConfig& cfg) {
  return cfg.precision == Precision::f32 ? run_sweep_impl<float>(cfg)
                                         : run_sweep_impl<double>(cfg);
}

std::string render_report(std::span<const BenchRecord> records, ReportFormat fmt) {
  if (records.empty()) throw std::invalid_argument("render_report: no records");
  switch (fmt) {
    case ReportFormat::csv: return render_csv(records);
    case ReportFormat::json: return render_json(records);
    case ReportFormat::md: return render_md(records);
  }
  throw std::invalid_argument("render_report: unknown format");
}

std::vector<BenchRecord> parse_records_json(std::string_view text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  std::vector<BenchRecord> records;
  for (const auto& j : arr) {
    BenchRecord rec;
    rec.op_id = j.at("op").get<std::string>();
    rec.batch = j.at("B").get<int64_t>();
    rec.dim = j.at("D").get<int64_t>();
    rec.t = j.at("T").get<int64_t>();
    rec.max_len = j.at("max_len").get<int64_t>();
    rec.dist = parse_length_kind(j.at("dist").get<std::string>());
    rec.seed = j.at("seed").get<uint64_t>();
    rec.precision = parse_precision(j.at("precision").get<std::string>());
    rec.threads = j.at("threads").get<int>();
    rec.flops_jagged = j.at("flops_jagged").get<int64_t>();
    rec.flops_padded = j.at("flops_padded").get<int64_t>();
    rec.bytes_jagged = j.at("bytes_jagged").get<int64_t>();
    rec.bytes_padded = j.at("bytes_padded").get<int64_t>();
    for (const auto& vj : j.at("variants")) {
      VariantStats v;
      v.variant = vj.at("variant").get<std::string>();
      v.time_us_p50 = vj.at("time_us_p50").get<double>();
      v.time_us_p10 = vj.at("time_us_p10").get<double>();
      v.time_us_p90 = vj.at("time_us_p90").get<double>();
      v.flops = vj.at("flops").get<int64_t>();
      v.bytes = vj.at("bytes").get<int64_t>();
      v.checksum = vj.at("checksum").get<double>();
      v.noisy = vj.at("noisy").get<bool>();
      v.speedup_vs_dense = vj.at("speedup_vs_dense").get<double>();
      v.bytes_ratio_vs_dense = vj.at("bytes_ratio_vs_dense").get<double>();
      rec.variants.push_back(std::move(v));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace jagged::bench
