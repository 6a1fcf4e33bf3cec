#include "jagged/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace jagged {

namespace {

using nlohmann::json;

json parse(std::string_view text) { return json::parse(text); }

template <typename T>
std::vector<T> to_vector(const json& j) {
  return j.get<std::vector<T>>();
}

}  // namespace

template <typename T>
std::string to_fixture_json(const JaggedTensor<T>& x) {
  json j;
  j["dim"] = x.dim();
  j["offsets"] = x.offsets();
  j["values"] = x.values();
  return j.dump();
}

template <typename T>
std::string to_fixture_json(const Jagged2Tensor<T>& x) {
  json j;
  j["seq_lengths"] = x.seq_lengths();
  j["values"] = x.values();
  return j.dump();
}

template <typename T>
std::string to_fixture_json(const DenseTensor<T>& x) {
  json j;
  j["shape"] = x.shape();
  j["data"] = x.data();
  return j.dump();
}

template <typename T>
JaggedTensor<T> jagged_from_fixture_json(std::string_view text) {
  const json j = parse(text);
  return JaggedTensor<T>(to_vector<int64_t>(j.at("offsets")), to_vector<T>(j.at("values")),
                         j.at("dim").get<int64_t>());
}

template <typename T>
Jagged2Tensor<T> jagged2_from_fixture_json(std::string_view text) {
  const json j = parse(text);
  return Jagged2Tensor<T>(to_vector<int64_t>(j.at("seq_lengths")), to_vector<T>(j.at("values")));
}

template <typename T>
DenseTensor<T> dense_from_fixture_json(std::string_view text) {
  const json j = parse(text);
  return DenseTensor<T>(to_vector<int64_t>(j.at("shape")), to_vector<T>(j.at("data")));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

#define JAGGED_INSTANTIATE_IO(T)                                       \
  template std::string to_fixture_json(const JaggedTensor<T>&);        \
  template std::string to_fixture_json(const Jagged2Tensor<T>&);       \
  template std::string to_fixture_json(const DenseTensor<T>&);         \
  template JaggedTensor<T> jagged_from_fixture_json(std::string_view); \
  template Jagged2Tensor<T> jagged2_from_fixture_json(std::string_view); \
  template DenseTensor<T> dense_from_fixture_json(std::string_view);

JAGGED_INSTANTIATE_IO(float)
JAGGED_INSTANTIATE_IO(double)

#undef JAGGED_INSTANTIATE_IO

}  // namespace jagged
