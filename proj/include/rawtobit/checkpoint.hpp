// Copyright 2026 The RAWtoBit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RAWTOBIT_CHECKPOINT_HPP_
#define RAWTOBIT_CHECKPOINT_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rawtobit/tensor.hpp"

namespace rtb {

// Flat named-tensor archive with a JSON config snapshot up front.
struct Checkpoint {
  nlohmann::json config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  std::map<std::string, Tensor> tensor_map() const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rtb

#endif  // RAWTOBIT_CHECKPOINT_HPP_
