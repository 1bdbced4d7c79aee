// Copyright 2026 the incnerf authors
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
#ifndef INCNERF_ERRORS_HPP_
#define INCNERF_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace incnerf {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input matrix failed the orthogonality / determinant check.
class NotARotationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Image too small for the requested pyramid depth.
class TooSmallError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point configuration too degenerate to recover an alignment.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Images with incompatible dimensions fed to a metric.
class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A gradient came back NaN/inf; the optimization cannot continue.
class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training loss became non-finite. Carries the phase and image index.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& phase, int image_index)
      : std::runtime_error("diverged in phase '" + phase + "' at image " +
                           std::to_string(image_index)),
        phase_(phase),
        image_index_(image_index) {}

  const std::string& phase() const { return phase_; }
  int image_index() const { return image_index_; }

 private:
  std::string phase_;
  int image_index_;
};

/// Filesystem failure while reading or writing a dataset/checkpoint.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents; the message names the offending field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace incnerf

#endif  // INCNERF_ERRORS_HPP_
