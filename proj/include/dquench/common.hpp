// Copyright 2026 The dquench Authors
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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dquench {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

enum class ErrorKind {
    InvalidArgument,
    UndefinedDirection,
    Gapless,
    Unresolved,
    NoCrossover,
    DegenerateField,
    StepSize,
    Io,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

// Fixed-tree pairwise sum. The tree shape depends only on the length, so the
// result is the same whoever computes the terms.
double pairwise_sum(std::span<const double> values);

int hardware_workers();

// Runs body(i) for i in [0, count). Work is handed out dynamically; callers
// write into preallocated slots. The exception thrown by the lowest index is
// rethrown after all workers join.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

// 17 significant digits, round-trips through strtod.
std::string format_real(double value);

}  // namespace dquench
