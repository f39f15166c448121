// Copyright 2026 The SAGE Authors
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

#ifndef SAGE__ERROR_HPP_
#define SAGE__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace sage
{

/// Broad failure classes. The C API maps each one onto a status code.
enum class ErrorKind
{
  kInvalidArgument,  // precondition or shape violation
  kValidation,       // config / scenario rejected before any stage runs
  kIo,               // file missing or unwritable
  kParse,            // malformed input file
  kNumeric,          // fit failed (e.g. Cholesky after jitter ladder)
  kProtocol,         // split overlap, plan/table mismatch, contract misuse
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string & what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string & what)
{
  if (!condition) {
    throw Error(kind, what);
  }
}

}  // namespace sage

#endif  // SAGE__ERROR_HPP_
