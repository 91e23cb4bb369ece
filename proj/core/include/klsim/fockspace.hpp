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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace klsim {

/// One occupation tuple (source | chain sites | drain). Sites are hard-core
/// (0 or 1); source and drain are bosonic counts.
struct OccupationState {
  int n_source = 0;
  std::vector<std::uint8_t> sites;
  int n_drain = 0;

  int chain_count() const noexcept;
  int total() const noexcept { return n_source + chain_count() + n_drain; }

  bool operator==(const OccupationState&) const = default;
  std::strong_ordering operator<=>(const OccupationState&) const = default;

  /// "(n_source|s1,s2,...|n_drain)"
  std::string to_string() const;
};

/// A mode of the source + chain + drain system. Chain sites are labelled
/// 1..N in the flux direction.
class Mode {
 public:
  enum class Kind : std::uint8_t { Source, Site, Drain };

  static Mode source() noexcept { return Mode(Kind::Source, 0); }
  static Mode drain() noexcept { return Mode(Kind::Drain, 0); }
  /// Chain site `label` in 1..N_sites. Range is checked against a basis.
  static Mode site(int label) noexcept { return Mode(Kind::Site, label); }

  Kind kind() const noexcept { return kind_; }
  int site_label() const noexcept { return site_; }
  bool is_boson() const noexcept { return kind_ != Kind::Site; }

  std::string name() const;
  bool operator==(const Mode&) const = default;

 private:
  Mode(Kind k, int s) : kind_(k), site_(s) {}
  Kind kind_;
  int site_;
};

/// Occupation of `mode` in `state`. Throws InvalidArgument for a site
/// label outside 1..sites.size().
int occupation(const OccupationState& state, const Mode& mode);

/// Fixed-total-number sector of the source + chain + drain Fock space.
///
/// States are stored in canonical order: descending lexicographic order of
/// the tuple (n_source, s_1, ..., s_N, n_drain). The fully loaded source
/// (N_tot | 0...0 | 0) is therefore always index 0. Instances are immutable.
class SectorBasis {
 public:
  int n_sites() const noexcept { return n_sites_; }
  int n_total() const noexcept { return n_total_; }
  std::size_t size() const noexcept { return states_.size(); }

  const OccupationState& state(std::size_t index) const;
  /// Throws NotFound when `s` is not in this sector.
  std::size_t index_of(const OccupationState& s) const;
  bool contains(const OccupationState& s) const noexcept;

  std::span<const OccupationState> states() const noexcept { return states_; }
  auto begin() const noexcept { return states_.begin(); }
  auto end() const noexcept { return states_.end(); }

  /// All modes in column order: source, site 1..N, drain.
  std::vector<Mode> modes() const;
  bool has_mode(const Mode& m) const noexcept;

  bool same_sector(const SectorBasis& other) const noexcept {
    return n_sites_ == other.n_sites_ && n_total_ == other.n_total_;
  }

 private:
  friend std::shared_ptr<const SectorBasis> build_sector(int, int, bool);
  SectorBasis(int n_sites, int n_total) : n_sites_(n_sites), n_total_(n_total) {}

  int n_sites_;
  int n_total_;
  std::vector<OccupationState> states_;
};

using SectorBasisPtr = std::shared_ptr<const SectorBasis>;

/// Enumerates the sector with `n_total` particles on source + `n_sites`
/// hard-core sites + drain. Both arguments must be >= 1.
SectorBasisPtr enumerate_sector(int n_sites, int n_total);

/// Like enumerate_sector but admits the empty sector n_total = 0, which is
/// the image of a single-particle sector under a lowering operator.
SectorBasisPtr build_sector(int n_sites, int n_total, bool allow_empty);

/// Closed-form sector size: sum_k C(n_sites, k) (n_total - k + 1).
std::size_t sector_dimension(int n_sites, int n_total);

std::size_t index_of(const SectorBasis& basis, const OccupationState& s);
const OccupationState& state_of(const SectorBasis& basis, std::size_t index);

}  // namespace klsim
