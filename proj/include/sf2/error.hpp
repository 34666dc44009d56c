// Copyright 2026 The sf2lab Authors.
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

#ifndef SF2_ERROR_HPP
#define SF2_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace sf2 {

enum class ErrorKind {
  ZeroVector,
  NonFinite,
  DomainError,
  DegenerateBatch,
  InvariantViolation,
  InvalidConfig,
  Infeasible,
  ParseError,
  MissingId,
  DegenerateLabels,
  ZeroVariance,
  Diverged,
  Io,
  Usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DegenerateBatch: return "DegenerateBatch";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingId: return "MissingId";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace sf2

#endif  // SF2_ERROR_HPP
