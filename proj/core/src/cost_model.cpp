#include "jagged/cost_model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace jagged {

namespace {

struct Resolved {
  int64_t b, d, t, eb;
  int64_t sum_len = 0;    // sum Bi
  int64_t sum_sq = 0;     // sum Bi^2
  int64_t max_len = 0;    // padded length
  int64_t block_q, block_k;
  const std::vector<int64_t>* lengths;
};

Resolved resolve(const OpConfig& cfg) {
  if (cfg.lengths.empty()) throw std::invalid_argument("cost model: lengths required");
  if (static_cast<int64_t>(cfg.lengths.size()) != cfg.batch)
    throw std::invalid_argument("cost model: batch != lengths size");
  if (cfg.dim < 1 || cfg.t < 1 || cfg.element_bytes < 1)
    throw std::invalid_argument("cost model: dim, t, element_bytes must be positive");
  Resolved r{cfg.batch, cfg.dim, cfg.t, cfg.element_bytes, 0, 0, 0,
             cfg.block_q, cfg.block_k, &cfg.lengths};
  for (int64_t n : cfg.lengths) {
    if (n < 0) throw std::invalid_argument("cost model: negative length");
    r.sum_len += n;
    r.sum_sq += n * n;
    r.max_len = std::max(r.max_len, n);
  }
  if (cfg.padded_len) {
    if (*cfg.padded_len < r.max_len)
      throw std::invalid_argument("cost model: padded_len smaller than max length");
    r.max_len = *cfg.padded_len;
  }
  return r;
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

enum class Family {
  bmm,            // jagged_dense_bmm, jagged_jagged_bmm
  bmm_jagged_out, // jagged_jagged_bmm_jagged_out, array_jagged_bmm_jagged_out
  softmax,
  softmax2,
  mlp,
  attention_naive,
  attention_flash,
};

Family family_of(const std::string& op_id) {
  if (op_id == "jagged_dense_bmm" || op_id == "jagged_jagged_bmm") return Family::bmm;
  if (op_id == "jagged_jagged_bmm_jagged_out" || op_id == "array_jagged_bmm_jagged_out")
    return Family::bmm_jagged_out;
  if (op_id == "jagged_softmax") return Family::softmax;
  if (op_id == "jagged2_softmax") return Family::softmax2;
  if (op_id == "jagged_mlp") return Family::mlp;
  if (op_id == "dense_attention" || op_id == "jagged_attention") return Family::attention_naive;
  if (op_id == "dense_flash_attention" || op_id == "jagged_flash_attention")
    return Family::attention_flash;
  throw std::invalid_argument("cost model: unknown op_id '" + op_id + "'");
}

// The benchable MLP is the fixed two-layer chain D -> T (relu) -> D.
std::vector<int64_t> mlp_chain(const Resolved& r) { return {r.d, r.t, r.d}; }

int64_t mlp_flops_per_row(const Resolved& r) {
  const auto chain = mlp_chain(r);
  int64_t f = 0;
  for (size_t l = 0; l + 1 < chain.size(); ++l)
    f += 2 * chain[l] * chain[l + 1] + 2 * chain[l + 1];  // matmul + bias + activation
  return f;
}

// Streaming-softmax FLOPs for one sequence of length n (n query rows, each
// attending to n keys in blocks of block_k).
int64_t flash_softmax_flops(int64_t n, int64_t block_k, int64_t d) {
  if (n == 0) return 0;
  const int64_t per_row =
      3 * n + ceil_div(n, block_k) * 2 * (d + 1) + (d + 2);
  return n * per_row;
}

int64_t attention_matmul_flops(int64_t sum_sq, int64_t d) {
  // QK^T and PV multiply-adds plus the 1/sqrt(D) score scaling.
  return 4 * sum_sq * d + sum_sq;
}

}  // namespace

std::pair<int64_t, int64_t> flops_of(const OpConfig& cfg) {
  const Resolved r = resolve(cfg);
  const int64_t padded_rows = r.b * r.max_len;
  const int64_t padded_sq = r.b * r.max_len * r.max_len;
  switch (family_of(cfg.op_id)) {
    case Family::bmm:
      return {2 * r.sum_len * r.d * r.t, 2 * padded_rows * r.d * r.t};
    case Family::bmm_jagged_out:
      return {2 * r.sum_sq * r.d, 2 * padded_sq * r.d};
    case Family::softmax:
      return {4 * r.sum_len * r.d, 4 * padded_rows * r.d};
    case Family::softmax2:
      return {4 * r.sum_sq, 4 * padded_sq};
    case Family::mlp: {
      const int64_t per_row = mlp_flops_per_row(r);
      return {r.sum_len * per_row, padded_rows * per_row};
    }
    case Family::attention_naive:
      return {attention_matmul_flops(r.sum_sq, r.d) + 4 * r.sum_sq,
              attention_matmul_flops(padded_sq, r.d) + 4 * padded_sq};
    case Family::attention_flash: {
      int64_t jagged = attention_matmul_flops(r.sum_sq, r.d);
      for (int64_t n : *r.lengths) jagged += flash_softmax_flops(n, r.block_k, r.d);
      const int64_t padded = attention_matmul_flops(padded_sq, r.d) +
                             r.b * flash_softmax_flops(r.max_len, r.block_k, r.d);
      return {jagged, padded};
    }
  }
  throw std::logic_error("unreachable");
}

std::pair<int64_t, int64_t> intermediate_elements(const OpConfig& cfg) {
  const Resolved r = resolve(cfg);
  switch (family_of(cfg.op_id)) {
    case Family::attention_naive:
      return {r.sum_sq, r.b * r.max_len * r.max_len};
    case Family::attention_flash:
      return {r.block_q * r.block_k + r.sum_len,
              r.block_q * r.block_k + r.b * r.max_len};
    case Family::mlp: {
      const auto chain = mlp_chain(r);
      int64_t widest_hidden = 0;
      for (size_t l = 1; l + 1 < chain.size(); ++l)
        widest_hidden = std::max(widest_hidden, chain[l]);
      return {r.sum_len * widest_hidden, r.b * r.max_len * widest_hidden};
    }
    default:
      return {0, 0};
  }
}

std::pair<int64_t, int64_t> bytes_of(const OpConfig& cfg) {
  const Resolved r = resolve(cfg);
  const int64_t padded_rows = r.b * r.max_len;
  const int64_t padded_sq = r.b * r.max_len * r.max_len;
  const auto [scratch_j, scratch_p] = intermediate_elements(cfg);
  int64_t io_j = 0, io_p = 0;
  switch (family_of(cfg.op_id)) {
    case Family::bmm:
      if (cfg.op_id == "jagged_dense_bmm") {
        io_j = r.sum_len * r.d + r.b * r.d * r.t + r.sum_len * r.t;
        io_p = padded_rows * r.d + r.b * r.d * r.t + padded_rows * r.t;
      } else {  // jagged_jagged_bmm
        io_j = r.sum_len * (r.d + r.t) + r.b * r.d * r.t;
        io_p = padded_rows * (r.d + r.t) + r.b * r.d * r.t;
      }
      break;
    case Family::bmm_jagged_out:
      io_j = 2 * r.sum_len * r.d + r.sum_sq;
      io_p = 2 * padded_rows * r.d + padded_sq;
      break;
    case Family::softmax:
      io_j = 2 * r.sum_len * r.d;
      io_p = 2 * padded_rows * r.d;
      break;
    case Family::softmax2:
      io_j = 2 * r.sum_sq;
      io_p = 2 * padded_sq;
      break;
    case Family::mlp: {
      const auto chain = mlp_chain(r);
      int64_t params = 0;
      for (size_t l = 0; l + 1 < chain.size(); ++l)
        params += chain[l] * chain[l + 1] + chain[l + 1];
      io_j = r.sum_len * (chain.front() + chain.back()) + params;
      io_p = padded_rows * (chain.front() + chain.back()) + params;
      break;
    }
    case Family::attention_naive:
    case Family::attention_flash:
      io_j = 4 * r.sum_len * r.d;  // q, k, v, output
      io_p = 4 * padded_rows * r.d;
      break;
  }
  return {r.eb * (io_j + scratch_j), r.eb * (io_p + scratch_p)};
}

CostReport cost_report(const OpConfig& cfg) {
  const Resolved r = resolve(cfg);
  const auto [fj, fp] = flops_of(cfg);
  const auto [bj, bp] = bytes_of(cfg);
  CostReport rep;
  rep.op_id = cfg.op_id;
  rep.max_len = r.max_len;
  rep.flops_jagged = fj;
  rep.flops_padded = fp;
  rep.bytes_jagged = bj;
  rep.bytes_padded = bp;
  rep.ratio_flops = fj > 0 ? static_cast<double>(fp) / static_cast<double>(fj)
                           : (fp > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  rep.ratio_bytes = bj > 0 ? static_cast<double>(bp) / static_cast<double>(bj)
                           : (bp > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  return rep;
}

std::vector<CostReport> sweep_cost(const std::string& op_id, int64_t batch, int64_t dim,
                                   int64_t t, LengthKind kind, uint64_t seed,
                                   std::span<const int64_t> max_len_grid,
                                   int64_t element_bytes) {
  if (max_len_grid.empty()) throw std::invalid_argument("sweep_cost: empty grid");
  std::vector<CostReport> reports;
  reports.reserve(max_len_grid.size());
  for (int64_t g : max_len_grid) {
    OpConfig cfg;
    cfg.op_id = op_id;
    cfg.batch = batch;
    cfg.dim = dim;
    cfg.t = t;
    cfg.lengths = gen_lengths({kind, g, seed}, batch);
    cfg.element_bytes = element_bytes;
    cfg.padded_len = g;
    reports.push_back(cost_report(cfg));
  }
  return reports;
}

namespace {

bool variant_uses_padded_column(const OpConfig& cfg, const std::string& variant_id) {
  if (variant_id == "jagged") return false;
  if (variant_id == "padded") return true;
  if (variant_id == "dense_attention" || variant_id == "dense_flash_attention") return true;
  if (variant_id == "jagged_attention" || variant_id == "jagged_flash_attention") return false;
  throw std::invalid_argument("cost model: unknown variant '" + variant_id + "' for op '" +
                              cfg.op_id + "'");
}

OpConfig variant_config(const OpConfig& cfg, const std::string& variant_id) {
  OpConfig c = cfg;
  if (variant_id != "jagged" && variant_id != "padded") c.op_id = variant_id;
  return c;
}

}  // namespace

int64_t variant_flops(const OpConfig& cfg, const std::string& variant_id) {
  const auto [j, p] = flops_of(variant_config(cfg, variant_id));
  return variant_uses_padded_column(cfg, variant_id) ? p : j;
}

int64_t variant_bytes(const OpConfig& cfg, const std::string& variant_id) {
  const auto [j, p] = bytes_of(variant_config(cfg, variant_id));
  return variant_uses_padded_column(cfg, variant_id) ? p : j;
}

bool cost_model_knows(const std::string& op_id) {
  try {
    family_of(op_id);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace jagged
