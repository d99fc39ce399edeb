// Copyright 2026 The rankkit Authors. All Rights Reserved.
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rankkit {

/// Base class for every error raised by the library. The exit code is what
/// the command-line tool returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kData = 3;
inline constexpr int kDivergence = 4;
}  // namespace exit_code

// Shape or length mismatch between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error("dimension error: " + what, exit_code::kData) {}
};

// Out-of-domain hyperparameter (temperature <= 0, alpha outside [0,1], ...).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error("parameter error: " + what, exit_code::kConfig) {}
};

// Malformed input value such as a non-finite logit.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error("input error: " + what, exit_code::kData) {}
};

class BoundsError : public Error {
 public:
  explicit BoundsError(const std::string& what)
      : Error("bounds error: " + what, exit_code::kData) {}
};

// Example or checkpoint does not match the configured model schema.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what)
      : Error("schema error: " + what, exit_code::kConfig) {}
};

// Incremental-training snapshot incompatible with the current model.
class SnapshotError : public Error {
 public:
  explicit SnapshotError(const std::string& what)
      : Error("snapshot error: " + what, exit_code::kConfig) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error("numerical error: " + what, exit_code::kDivergence) {}
};

// Non-finite loss or gradient during training. Carries the step number.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error("divergence at step " + std::to_string(step) + ": " + what,
              exit_code::kDivergence),
        step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

// A metric that is not defined for the given input (single-class AUC,
// zero expected count in O/E).
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error("undefined metric: " + what, exit_code::kData) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error("config error: " + what, exit_code::kConfig) {}
};

// I/O failures and unparseable data files.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error("data error: " + what, exit_code::kData) {}
};

}  // namespace rankkit
