#pragma once

#include <string>
#include <string_view>

#include "jagged/tensor.hpp"

namespace jagged {

// JSON fixture format (UTF-8):
//   jagged  : {"dim": D, "offsets": [...], "values": [...]}
//   jagged2 : {"seq_lengths": [...], "values": [...]}
//   dense   : {"shape": [...], "data": [...]}
// Values are decimal numbers; readers accept scientific notation.

template <typename T>
std::string to_fixture_json(const JaggedTensor<T>& x);
template <typename T>
std::string to_fixture_json(const Jagged2Tensor<T>& x);
template <typename T>
std::string to_fixture_json(const DenseTensor<T>& x);

template <typename T>
JaggedTensor<T> jagged_from_fixture_json(std::string_view text);
template <typename T>
Jagged2Tensor<T> jagged2_from_fixture_json(std::string_view text);
template <typename T>
DenseTensor<T> dense_from_fixture_json(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace jagged
