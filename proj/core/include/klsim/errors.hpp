// Copyright 2026 The klsim Authors
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

namespace klsim {

/// Bad argument, out-of-range parameter, or mismatched basis/operator pair.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lookup of a state or key that is not present.
class NotFound : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A dense construction was refused because the problem exceeds a size cap.
class CapExceeded : public std::length_error {
 public:
  CapExceeded(const std::string& what, std::size_t cap)
      : std::length_error(what), cap_(cap) {}
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

/// Integration could not continue. Carries the simulation time reached.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double time_reached)
      : std::runtime_error(what + " (t reached = " + std::to_string(time_reached) + ")"),
        reason_(what),
        time_reached_(time_reached) {}
  double time_reached() const noexcept { return time_reached_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  double time_reached_;
};

/// A numerical integrity check failed, e.g. a non-negligible imaginary
/// part in an expectation value that must be real.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested level is never crossed downward by a time series.
class NoCrossing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace klsim
