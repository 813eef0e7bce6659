// Copyright 2026 The nosdist Authors.
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

#ifndef NOSDIST_ERRORS_H_
#define NOSDIST_ERRORS_H_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nosdist {

// Base class for every error the library raises. `code()` is a stable,
// machine-readable identifier used in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid_argument", message) {}
};

// A root search could not bracket its solution (e.g. an invalid family for
// a given preference draw).
class NoSolution : public Error {
 public:
  explicit NoSolution(const std::string& message)
      : Error("no_solution", message) {}
};

// Conditioning on an event whose probability is numerically zero.
class DegenerateConditioning : public Error {
 public:
  explicit DegenerateConditioning(const std::string& message)
      : Error("degenerate_conditioning", message) {}
};

class IntegrationDomainError : public Error {
 public:
  explicit IntegrationDomainError(const std::string& message)
      : Error("integration_domain", message) {}
};

class NonintegrableCurve : public Error {
 public:
  explicit NonintegrableCurve(const std::string& message)
      : Error("nonintegrable_curve", message) {}
};

// Collects every validation problem found in a configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error("config", Join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept {
    return problems_;
  }

 private:
  static std::string Join(const std::vector<std::string>& problems) {
    std::string out;
    for (const auto& p : problems) {
      if (!out.empty()) out += "; ";
      out += p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

}  // namespace nosdist

#endif  // NOSDIST_ERRORS_H_
