// Copyright 2026 The Betascript Authors
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

namespace betascript {

// Single exception type for the library. The message is meant for humans;
// `kind` lets callers branch on the failure class without string matching.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kParse,
    kInvalidInput,
    kDegenerate,
    kShapeMismatch,
    kSchema,
    kNumerical,
    kNoEvidence,
  };

  Error(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace betascript
