#pragma once

// Parameter checkpoints.
//
// Layout (ASCII header, then binary payload):
//   ppodice-params 1\n
//   meta <free text without newlines>\n
//   tensors <k>\n
//   <rows> <cols>\n            (k lines, one per tensor)
//   data\n
//   <row-major little-endian IEEE-754 float64 values of every tensor, in order>

#include "ppodice/common.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/policy.hpp"

#include <string>
#include <vector>

namespace ppodice {

struct TensorFile {
  std::string meta;
  std::vector<Matrix> tensors;
};

void save_tensors(const std::string& path, const std::string& meta, const std::vector<const Matrix*>& tensors);
TensorFile load_tensors(const std::string& path);

void save_mlp(const std::string& path, const MlpParams& params);
MlpParams load_mlp(const std::string& path);

void save_policy(const std::string& path, const PolicyParams& policy);
PolicyParams load_policy(const std::string& path);

}  // namespace ppodice
