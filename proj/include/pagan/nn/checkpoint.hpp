#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pagan/nn/tensor.hpp"

namespace pagan::nn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Layout:
//   pagan-checkpoint 1
//   tensors <count>
//   <name> <rank> <dim0> ... <dimN>     (one line per tensor)
//   data
//   <little-endian IEEE-754 doubles, tensors concatenated in manifest order>
void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

}  // namespace pagan::nn
