// Copyright 2026 the groundrank authors
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

#include <stdexcept>
#include <string>

namespace groundrank {

// Bad input data: malformed files, invariant violations, bad configuration.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while obtaining scores from a scorer. Transport failures are
// retryable; malformed or non-finite responses are not.
class ScorerError : public std::runtime_error {
 public:
  ScorerError(const std::string& what, bool retryable, int attempts = 1)
      : std::runtime_error(what), retryable_(retryable), attempts_(attempts) {}

  bool retryable() const noexcept { return retryable_; }
  int attempts() const noexcept { return attempts_; }

 private:
  bool retryable_;
  int attempts_;
};

}  // namespace groundrank
