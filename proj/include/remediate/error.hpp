// Copyright 2026 The Remediate Authors.
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

#ifndef REMEDIATE_ERROR_HPP_
#define REMEDIATE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace remediate {

// Malformed or inconsistent input data. The message carries the file, row
// and column where the problem was found when that information exists.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request that cannot be honored with the given arguments (wrong objective
// for an operation, missing budget, limits exceeded, ...).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace remediate

#endif  // REMEDIATE_ERROR_HPP_
