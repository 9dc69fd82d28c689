// Copyright 2026 The isoprobe authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#ifndef ISOPROBE_ERROR_HPP
#define ISOPROBE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isoprobe {

// Error taxonomy shared by the library and the CLI. The numeric value of the
// kind doubles as the process exit code: 1 I/O, 2 contract violation
// (bad arguments, malformed input files), 3 numerical failure.
enum class ErrorKind { kIo = 1, kContract = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::kIo, msg);
}

[[noreturn]] inline void throw_contract(const std::string& msg) {
  throw Error(ErrorKind::kContract, msg);
}

[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::kNumeric, msg);
}

// Non-fatal diagnostics. Callers pass a sink when they care; the CLI prints
// each entry to stderr.
using Warnings = std::vector<std::string>;

inline void add_warning(Warnings* warnings, std::string msg) {
  if (warnings != nullptr) warnings->push_back(std::move(msg));
}

}  // namespace isoprobe

#endif  // ISOPROBE_ERROR_HPP
