#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jagged/op_registry.hpp"

namespace jagged {

struct GradCheckReport {
  std::string op_id;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_coordinate;  // e.g. "inputs[1][12]"
  bool pass = false;
};

/// Central finite differences of a scalar-valued function, coordinate by
/// coordinate, with per-coordinate step eps * max(1, |x_i|). Throws when f
/// produces a non-finite value, naming the offending coordinate.
std::vector<double> numerical_grad(const std::function<double(std::span<const double>)>& f,
                                   std::span<const double> x, double eps = 1e-5);

/// Draws random inputs and a random cotangent u, then compares the analytic
/// vjp of <u, op(x)> against numerical_grad for every input slot. Relative
/// error uses denominator max(|analytic|, |numeric|, 1e-8).
GradCheckReport check_op(const OpDef& op, const ShapeSpec& spec, uint64_t seed, double tol,
                         double abs_floor = 1e-8);

/// Registry lookup variant; throws on unknown op id.
GradCheckReport check_op(const std::string& op_id, const ShapeSpec& spec, uint64_t seed,
                         double tol);

std::string to_json_string(const GradCheckReport& report);

}  // namespace jagged
