#include "jagged/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace jagged {

std::vector<double> numerical_grad(const std::function<double(std::span<const double>)>& f,
                                   std::span<const double> x, double eps) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (size_t i = 0; i < x.size(); ++i) {
    const double h = eps * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("numerical_grad: non-finite value at coordinate " +
                               std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

GradCheckReport check_op(const OpDef& op, const ShapeSpec& spec, uint64_t seed, double tol,
                         double abs_floor) {
  GradCheckReport report;
  report.op_id = op.id;
  if (!op.vjp) throw std::invalid_argument("check_op: op '" + op.id + "' has no vjp");

  Rng rng(seed);
  std::vector<Value> inputs = op.make_inputs(spec, rng);
  for (int attempt = 0; op.accept && !op.accept(inputs); ++attempt) {
    if (attempt >= 64)
      throw std::runtime_error("check_op: could not draw acceptable inputs for '" + op.id + "'");
    inputs = op.make_inputs(spec, rng);
  }

  const Value out = op.forward(inputs);
  const std::vector<double> cotangent =
      uniform_values<double>(rng, flat_size(out), -1.0, 1.0);
  const Value grad_out = with_flat_values(out, cotangent);

  try {
    const std::vector<Value> analytic = op.vjp(inputs, grad_out);
    if (analytic.size() != inputs.size())
      throw std::runtime_error("check_op: vjp returned wrong number of gradients");

    for (size_t slot = 0; slot < inputs.size(); ++slot) {
      const std::vector<double> base = flat_values(inputs[slot]);
      const auto objective = [&](std::span<const double> xs) {
        std::vector<Value> probe = inputs;
        probe[slot] = with_flat_values(inputs[slot], std::vector<double>(xs.begin(), xs.end()));
        const std::vector<double> ys = flat_values(op.forward(probe));
        double acc = 0.0;
        for (size_t i = 0; i < ys.size(); ++i) acc += cotangent[i] * ys[i];
        return acc;
      };
      const std::vector<double> numeric = numerical_grad(objective, base);
      const std::vector<double> exact = flat_values(analytic[slot]);
      if (exact.size() != numeric.size())
        throw std::runtime_error("check_op: gradient size mismatch at slot " +
                                 std::to_string(slot));
      for (size_t i = 0; i < numeric.size(); ++i) {
        const double abs_err = std::abs(exact[i] - numeric[i]);
        const double rel_err =
            abs_err / std::max({std::abs(exact[i]), std::abs(numeric[i]), 1e-8});
        if (rel_err > report.max_relative_error) {
          report.max_relative_error = rel_err;
          report.worst_coordinate =
              "inputs[" + std::to_string(slot) + "][" + std::to_string(i) + "]";
        }
        report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      }
    }
    report.pass = report.max_relative_error < tol || report.max_absolute_error < abs_floor;
  } catch (const std::runtime_error& e) {
    report.pass = false;
    report.max_relative_error = std::numeric_limits<double>::infinity();
    report.max_absolute_error = std::numeric_limits<double>::infinity();
    report.worst_coordinate = e.what();
  }
  return report;
}

GradCheckReport check_op(const std::string& op_id, const ShapeSpec& spec, uint64_t seed,
                         double tol) {
  const OpDef* op = find_op(op_id);
  if (!op) throw std::invalid_argument("check_op: unknown op '" + op_id + "'");
  return check_op(*op, spec, seed, tol);
}

std::string to_json_string(const GradCheckReport& report) {
  nlohmann::json j;
  j["op_id"] = report.op_id;
  j["max_relative_error"] = report.max_relative_error;
  j["max_absolute_error"] = report.max_absolute_error;
  j["worst_coordinate"] = report.worst_coordinate;
  j["pass"] = report.pass;
  return j.dump();
}

}  // namespace jagged
