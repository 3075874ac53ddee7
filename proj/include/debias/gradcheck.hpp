// Copyright 2026 The debias-bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Finite-difference checks of every loss and every method's composite
// objective on small fixed batches.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace debias {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
};

inline constexpr double kGradCheckTolerance = 1e-4;

// Loss functions driven by a small linear softmax model.
std::vector<GradCheckResult> check_loss_gradients(std::uint64_t seed = 7);
// Trainer::gradient_check for every method on an 8-sample batch.
std::vector<GradCheckResult> check_step_gradients(std::uint64_t seed = 7);

}  // namespace debias
