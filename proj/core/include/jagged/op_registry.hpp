#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "jagged/rng.hpp"
#include "jagged/tensor.hpp"

namespace jagged {

/// Binary64 tensor value for the generic operator dispatch used by the
/// gradient checker and the CLI check command.
using Value = std::variant<JaggedTensor<double>, Jagged2Tensor<double>, DenseTensor<double>>;

/// Shape recipe for drawing random operator inputs.
struct ShapeSpec {
  std::vector<int64_t> lengths;
  int64_t dim = 2;
  int64_t t = 2;
};

int64_t flat_size(const Value& v);
std::vector<double> flat_values(const Value& v);
/// Same metadata as v, with the flat value buffer replaced.
Value with_flat_values(const Value& v, std::vector<double> values);

/// A registered operator, addressable by its stable string id.
struct OpDef {
  std::string id;
  std::function<std::vector<Value>(const ShapeSpec&, Rng&)> make_inputs;
  std::function<Value(const std::vector<Value>&)> forward;
  /// Per-input gradients, same order and layouts as the inputs.
  std::function<std::vector<Value>(const std::vector<Value>&, const Value&)> vjp;
  /// Optional rejection rule for inputs that sit too close to an activation
  /// kink for finite differences.
  std::function<bool(const std::vector<Value>&)> accept;
};

/// Looks up an op by id; returns nullptr when unknown.
const OpDef* find_op(const std::string& id);

/// Ids of every op with a registered vjp.
std::vector<std::string> registered_op_ids();

}  // namespace jagged
