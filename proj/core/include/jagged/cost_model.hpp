#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jagged/rng.hpp"

namespace jagged {

// Analytic FLOP and byte accounting for every operator in both jagged and
// padded-dense execution.
//
// FLOP convention: a fused multiply-add counts as 2 FLOPs; exp, div, log,
// add, mul and max-compare count as 1 each. Softmax costs 4 per element
// (max, subtract+exp, sum, divide passes). Streaming softmax costs 3 per
// score element plus a rescale charge of 2*(D+1) per (query row, key block)
// and a finalize charge of D+2 per query row.
//
// Byte convention: element_bytes * (input elements + output elements + peak
// intermediate elements). Logical tensor traffic only; allocator overhead and
// gradients are not modeled. Naive attention's intermediate is the full score
// tensor (sum Bi^2 jagged, B*max_L^2 padded); flash attention's is the block
// buffer plus one logsumexp slot per query row.

struct OpConfig {
  std::string op_id;
  int64_t batch = 1;
  int64_t dim = 1;
  int64_t t = 1;
  std::vector<int64_t> lengths;
  int64_t element_bytes = 4;
  std::optional<int64_t> padded_len;  // defaults to max(lengths)
  int64_t block_q = 64;               // flash-variant model parameters
  int64_t block_k = 64;
};

struct CostReport {
  std::string op_id;
  int64_t max_len = 0;
  int64_t flops_jagged = 0;
  int64_t flops_padded = 0;
  int64_t bytes_jagged = 0;
  int64_t bytes_padded = 0;
  double ratio_flops = 1.0;  // padded / jagged
  double ratio_bytes = 1.0;
};

/// (jagged, padded) FLOP counts. Throws on unknown op_id.
std::pair<int64_t, int64_t> flops_of(const OpConfig& cfg);

/// (jagged, padded) byte counts. Throws on unknown op_id.
std::pair<int64_t, int64_t> bytes_of(const OpConfig& cfg);

/// (jagged, padded) peak intermediate element counts (the scratch term of
/// bytes_of, before multiplying by element_bytes).
std::pair<int64_t, int64_t> intermediate_elements(const OpConfig& cfg);

CostReport cost_report(const OpConfig& cfg);

/// One report per grid point; lengths are regenerated per point from the same
/// seed with max_len set to the grid value.
std::vector<CostReport> sweep_cost(const std::string& op_id, int64_t batch, int64_t dim,
                                   int64_t t, LengthKind kind, uint64_t seed,
                                   std::span<const int64_t> max_len_grid,
                                   int64_t element_bytes);

/// Analytic numbers for one executed bench variant. "jagged"/"padded" pick a
/// column of cfg.op_id directly; attention variant ids pick the column
/// matching their layout (dense_* -> padded, jagged_* -> jagged).
int64_t variant_flops(const OpConfig& cfg, const std::string& variant_id);
int64_t variant_bytes(const OpConfig& cfg, const std::string& variant_id);

bool cost_model_knows(const std::string& op_id);

}  // namespace jagged
