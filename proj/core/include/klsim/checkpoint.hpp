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

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "klsim/density_matrix.hpp"

namespace klsim {

/// First line of every checkpoint file.
inline constexpr std::string_view kCheckpointMagic = "KLSIM1";

struct Checkpoint {
  DensityMatrix state;
  double t = 0.0;
};

/// Text container: magic line, basis descriptor, time, then one
/// "re im" line per matrix entry in row-major order. Numbers are written
/// as hexadecimal floating point so a round trip is bit-exact.
void write_checkpoint(std::ostream& out, const DensityMatrix& rho, double t);
/// Rebuilds the basis from its descriptor. Throws InvalidArgument on a
/// bad magic line or malformed content.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const DensityMatrix& rho, double t);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace klsim
