// Copyright 2026 The s2l Authors.
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
#include <stdexcept>
#include <string>

namespace s2l {

// Broad failure classes. The CLI maps them onto exit codes.
enum class ErrorCategory {
  kUsage,   // bad invocation or configuration
  kData,    // malformed or inconsistent input data
  kRemote,  // remote scorer unreachable or misbehaving
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string &what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

#define S2L_DATA_ERROR(Name)                                   \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string &what)                     \
        : Error(ErrorCategory::kData, #Name ": " + what) {}    \
  }

S2L_DATA_ERROR(MalformedMR);
S2L_DATA_ERROR(UnboundPlaceholder);
S2L_DATA_ERROR(DuplicateRule);
S2L_DATA_ERROR(PatternError);
S2L_DATA_ERROR(ZeroSlots);
S2L_DATA_ERROR(EmptyCorpus);
S2L_DATA_ERROR(LengthMismatch);
S2L_DATA_ERROR(ModelFormatError);
S2L_DATA_ERROR(IoError);

#undef S2L_DATA_ERROR

// Malformed rule or pattern file line; carries the 1-based line number.
class RuleSyntax : public Error {
 public:
  RuleSyntax(std::size_t line_no, const std::string &what)
      : Error(ErrorCategory::kData,
              "RuleSyntax: line " + std::to_string(line_no) + ": " + what),
        line_no_(line_no) {}

  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what)
      : Error(ErrorCategory::kUsage, what) {}
};

class RemoteUnavailable : public Error {
 public:
  explicit RemoteUnavailable(const std::string &what)
      : Error(ErrorCategory::kRemote, "RemoteUnavailable: " + what) {}
};

}  // namespace s2l
