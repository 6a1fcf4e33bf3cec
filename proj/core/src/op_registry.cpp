#include "jagged/op_registry.hpp"

#include <cmath>
#include <stdexcept>

#include "jagged/attention.hpp"
#include "jagged/linalg.hpp"

namespace jagged {

namespace {

using J = JaggedTensor<double>;
using J2 = Jagged2Tensor<double>;
using D = DenseTensor<double>;

int64_t sum_lengths(const std::vector<int64_t>& lengths) {
  int64_t s = 0;
  for (int64_t n : lengths) s += n;
  return s;
}

int64_t sum_sq_lengths(const std::vector<int64_t>& lengths) {
  int64_t s = 0;
  for (int64_t n : lengths) s += n * n;
  return s;
}

J random_jagged(const ShapeSpec& spec, int64_t dim, Rng& rng) {
  return make_jagged<double>(spec.lengths,
                             uniform_values<double>(rng, sum_lengths(spec.lengths) * dim, -1, 1),
                             dim);
}

J2 random_jagged2(const ShapeSpec& spec, Rng& rng) {
  return make_jagged2<double>(spec.lengths,
                              uniform_values<double>(rng, sum_sq_lengths(spec.lengths), -1, 1));
}

D random_dense(std::vector<int64_t> shape, Rng& rng) {
  int64_t n = 1;
  for (int64_t s : shape) n *= s;
  return D(std::move(shape), uniform_values<double>(rng, n, -1, 1));
}

// The registry's MLP is a two-layer net [x, W0, b0, W1, b1] with relu after
// the first layer; biases are carried as rank-2 [1, D_out] tensors.
std::vector<MlpLayer<double>> mlp_layers_from_inputs(const std::vector<Value>& in) {
  const auto& w0 = std::get<D>(in[1]);
  const auto& b0 = std::get<D>(in[2]);
  const auto& w1 = std::get<D>(in[3]);
  const auto& b1 = std::get<D>(in[4]);
  std::vector<MlpLayer<double>> layers;
  layers.push_back({w0, b0.data(), Activation::relu});
  layers.push_back({w1, b1.data(), Activation::none});
  return layers;
}

std::vector<OpDef> build_registry() {
  std::vector<OpDef> ops;

  ops.push_back(OpDef{
      "jagged_dense_bmm",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{
            random_jagged(s, s.dim, rng),
            random_dense({static_cast<int64_t>(s.lengths.size()), s.dim, s.t}, rng)};
      },
      [](const std::vector<Value>& in) {
        return Value{jagged_dense_bmm(std::get<J>(in[0]), std::get<D>(in[1]))};
      },
      [](const std::vector<Value>& in, const Value& g) {
        auto grads = jagged_dense_bmm_vjp(std::get<J>(in[0]), std::get<D>(in[1]), std::get<J>(g));
        return std::vector<Value>{std::move(grads.dx), std::move(grads.dw)};
      },
      nullptr});

  ops.push_back(OpDef{
      "jagged_jagged_bmm",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged(s, s.dim, rng), random_jagged(s, s.t, rng)};
      },
      [](const std::vector<Value>& in) {
        return Value{jagged_jagged_bmm(std::get<J>(in[0]), std::get<J>(in[1]))};
      },
      [](const std::vector<Value>& in, const Value& g) {
        auto grads = jagged_jagged_bmm_vjp(std::get<J>(in[0]), std::get<J>(in[1]), std::get<D>(g));
        return std::vector<Value>{std::move(grads.dx), std::move(grads.dy)};
      },
      nullptr});

  ops.push_back(OpDef{
      "jagged_softmax",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged(s, s.dim, rng)};
      },
      [](const std::vector<Value>& in) { return Value{jagged_softmax(std::get<J>(in[0]))}; },
      [](const std::vector<Value>& in, const Value& g) {
        return std::vector<Value>{jagged_softmax_vjp(std::get<J>(in[0]), std::get<J>(g))};
      },
      nullptr});

  ops.push_back(OpDef{
      "jagged_jagged_bmm_jagged_out",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged(s, s.dim, rng), random_jagged(s, s.dim, rng)};
      },
      [](const std::vector<Value>& in) {
        return Value{jagged_jagged_bmm_jagged_out(std::get<J>(in[0]), std::get<J>(in[1]))};
      },
      [](const std::vector<Value>& in, const Value& g) {
        auto grads = jagged_jagged_bmm_jagged_out_vjp(std::get<J>(in[0]), std::get<J>(in[1]),
                                                      std::get<J2>(g));
        return std::vector<Value>{std::move(grads.dq), std::move(grads.dk)};
      },
      nullptr});

  ops.push_back(OpDef{
      "array_jagged_bmm_jagged_out",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged2(s, rng), random_jagged(s, s.dim, rng)};
      },
      [](const std::vector<Value>& in) {
        return Value{array_jagged_bmm_jagged_out(std::get<J2>(in[0]), std::get<J>(in[1]))};
      },
      [](const std::vector<Value>& in, const Value& g) {
        auto grads = array_jagged_bmm_jagged_out_vjp(std::get<J2>(in[0]), std::get<J>(in[1]),
                                                     std::get<J>(g));
        return std::vector<Value>{std::move(grads.da), std::move(grads.dv)};
      },
      nullptr});

  ops.push_back(OpDef{
      "jagged2_softmax",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged2(s, rng)};
      },
      [](const std::vector<Value>& in) { return Value{jagged2_softmax(std::get<J2>(in[0]))}; },
      [](const std::vector<Value>& in, const Value& g) {
        return std::vector<Value>{jagged2_softmax_vjp(std::get<J2>(in[0]), std::get<J2>(g))};
      },
      nullptr});

  ops.push_back(OpDef{
      "jagged_mlp",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged(s, s.dim, rng), random_dense({s.dim, s.t}, rng),
                                  random_dense({int64_t{1}, s.t}, rng),
                                  random_dense({s.t, s.dim}, rng),
                                  random_dense({int64_t{1}, s.dim}, rng)};
      },
      [](const std::vector<Value>& in) {
        const auto layers = mlp_layers_from_inputs(in);
        return Value{jagged_mlp<double>(std::get<J>(in[0]), layers)};
      },
      [](const std::vector<Value>& in, const Value& g) {
        const auto layers = mlp_layers_from_inputs(in);
        auto grads = jagged_mlp_vjp<double>(std::get<J>(in[0]), layers, std::get<J>(g));
        std::vector<Value> out;
        out.push_back(std::move(grads.dx));
        for (auto& lg : grads.dlayers) {
          const int64_t width = static_cast<int64_t>(lg.dbias.size());
          out.push_back(std::move(lg.dweights));
          out.push_back(D({int64_t{1}, width}, std::move(lg.dbias)));
        }
        return out;
      },
      // Finite differences are unreliable across the relu kink; reject draws
      // with any first-layer pre-activation too close to zero.
      [](const std::vector<Value>& in) {
        const auto& x = std::get<J>(in[0]);
        const auto& w0 = std::get<D>(in[1]);
        const auto& b0 = std::get<D>(in[2]);
        const int64_t d_in = w0.shape()[0], d_out = w0.shape()[1];
        for (int64_t r = 0; r < x.total_rows(); ++r) {
          for (int64_t o = 0; o < d_out; ++o) {
            double z = b0.data()[o];
            for (int64_t i = 0; i < d_in; ++i) z += x.row(r)[i] * w0.at(i, o);
            if (std::abs(z) < 1e-4) return false;
          }
        }
        return true;
      }});

  ops.push_back(OpDef{
      "jagged_flash_attention",
      [](const ShapeSpec& s, Rng& rng) {
        return std::vector<Value>{random_jagged(s, s.dim, rng), random_jagged(s, s.dim, rng),
                                  random_jagged(s, s.dim, rng)};
      },
      [](const std::vector<Value>& in) {
        auto saved = jagged_flash_attention_forward(std::get<J>(in[0]), std::get<J>(in[1]),
                                                    std::get<J>(in[2]), 3, 3);
        return Value{std::move(saved.output)};
      },
      [](const std::vector<Value>& in, const Value& g) {
        const auto& q = std::get<J>(in[0]);
        const auto& k = std::get<J>(in[1]);
        const auto& v = std::get<J>(in[2]);
        const auto saved = jagged_flash_attention_forward(q, k, v, 3, 3);
        auto grads = jagged_flash_attention_backward(q, k, v, std::get<J>(g), saved);
        return std::vector<Value>{std::move(grads.dq), std::move(grads.dk), std::move(grads.dv)};
      },
      nullptr});

  return ops;
}

const std::vector<OpDef>& registry() {
  static const std::vector<OpDef> ops = build_registry();
  return ops;
}

}  // namespace

int64_t flat_size(const Value& v) {
  return std::visit(
      [](const auto& t) -> int64_t {
        using U = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<U, D>)
          return t.size();
        else
          return static_cast<int64_t>(t.values().size());
      },
      v);
}

std::vector<double> flat_values(const Value& v) {
  return std::visit(
      [](const auto& t) -> std::vector<double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, D>)
          return t.data();
        else
          return t.values();
      },
      v);
}

Value with_flat_values(const Value& v, std::vector<double> values) {
  return std::visit(
      [&values](const auto& t) -> Value {
        using U = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<U, J>) {
          return J(t.offsets(), std::move(values), t.dim());
        } else if constexpr (std::is_same_v<U, J2>) {
          return J2(t.seq_lengths(), std::move(values));
        } else {
          return D(t.shape(), std::move(values));
        }
      },
      v);
}

const OpDef* find_op(const std::string& id) {
  for (const auto& op : registry())
    if (op.id == id) return &op;
  return nullptr;
}

std::vector<std::string> registered_op_ids() {
  std::vector<std::string> ids;
  for (const auto& op : registry())
    if (op.vjp) ids.push_back(op.id);
  return ids;
}

}  // namespace jagged
