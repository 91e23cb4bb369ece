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

#include "klsim/fockspace.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "klsim/errors.hpp"

namespace klsim {

int OccupationState::chain_count() const noexcept {
  return std::accumulate(sites.begin(), sites.end(), 0);
}

std::string OccupationState::to_string() const {
  std::string out = "(" + std::to_string(n_source) + "|";
  for (std::size_t j = 0; j < sites.size(); ++j) {
    if (j) out += ',';
    out += static_cast<char>('0' + sites[j]);
  }
  return out + "|" + std::to_string(n_drain) + ")";
}

std::string Mode::name() const {
  switch (kind_) {
    case Kind::Source:
      return "source";
    case Kind::Drain:
      return "drain";
    case Kind::Site:
      break;
  }
  return "site_" + std::to_string(site_);
}

int occupation(const OccupationState& state, const Mode& mode) {
  switch (mode.kind()) {
    case Mode::Kind::Source:
      return state.n_source;
    case Mode::Kind::Drain:
      return state.n_drain;
    case Mode::Kind::Site:
      break;
  }
  const int label = mode.site_label();
  if (label < 1 || label > static_cast<int>(state.sites.size())) {
    throw InvalidArgument("site label " + std::to_string(label) + " outside 1.." +
                          std::to_string(state.sites.size()));
  }
  return state.sites[static_cast<std::size_t>(label - 1)];
}

const OccupationState& SectorBasis::state(std::size_t index) const {
  if (index >= states_.size()) {
    throw NotFound("basis index " + std::to_string(index) + " out of range (size " +
                   std::to_string(states_.size()) + ")");
  }
  return states_[index];
}

std::size_t SectorBasis::index_of(const OccupationState& s) const {
  // states_ is sorted in descending order.
  auto it = std::lower_bound(states_.begin(), states_.end(), s, std::greater<>{});
  if (it == states_.end() || *it != s) {
    throw NotFound("state " + s.to_string() + " is not in sector (N_sites=" +
                   std::to_string(n_sites_) + ", N_tot=" + std::to_string(n_total_) + ")");
  }
  return static_cast<std::size_t>(it - states_.begin());
}

bool SectorBasis::contains(const OccupationState& s) const noexcept {
  return std::binary_search(states_.begin(), states_.end(), s, std::greater<>{});
}

std::vector<Mode> SectorBasis::modes() const {
  std::vector<Mode> out;
  out.reserve(static_cast<std::size_t>(n_sites_) + 2);
  out.push_back(Mode::source());
  for (int j = 1; j <= n_sites_; ++j) out.push_back(Mode::site(j));
  out.push_back(Mode::drain());
  return out;
}

bool SectorBasis::has_mode(const Mode& m) const noexcept {
  return m.kind() != Mode::Kind::Site || (m.site_label() >= 1 && m.site_label() <= n_sites_);
}

SectorBasisPtr build_sector(int n_sites, int n_total, bool allow_empty) {
  if (n_sites < 1) throw InvalidArgument("N_sites must be >= 1, got " + std::to_string(n_sites));
  if (n_total < 0 || (n_total == 0 && !allow_empty)) {
    throw InvalidArgument("N_tot must be >= 1, got " + std::to_string(n_total));
  }
  if (n_sites > 24) throw InvalidArgument("N_sites > 24 is not supported");

  std::shared_ptr<SectorBasis> basis(new SectorBasis(n_sites, n_total));
  basis->states_.reserve(sector_dimension(n_sites, n_total));

  // Emit in descending lexicographic order directly: n_source from high to
  // low, then chain patterns from 11..1 down to 00..0, then n_drain fixed.
  const std::uint32_t patterns = 1u << n_sites;
  for (int ns = n_total; ns >= 0; --ns) {
    for (std::uint32_t p = patterns; p-- > 0;) {
      OccupationState s;
      s.n_source = ns;
      s.sites.resize(static_cast<std::size_t>(n_sites));
      int k = 0;
      for (int j = 0; j < n_sites; ++j) {
        // site 1 is the most significant bit
        const auto bit = static_cast<std::uint8_t>((p >> (n_sites - 1 - j)) & 1u);
        s.sites[static_cast<std::size_t>(j)] = bit;
        k += bit;
      }
      s.n_drain = n_total - ns - k;
      if (s.n_drain < 0) continue;
      basis->states_.push_back(std::move(s));
    }
  }
  return basis;
}

SectorBasisPtr enumerate_sector(int n_sites, int n_total) {
  return build_sector(n_sites, n_total, false);
}

std::size_t sector_dimension(int n_sites, int n_total) {
  std::size_t dim = 0;
  std::size_t binom = 1;  // C(n_sites, k)
  for (int k = 0; k <= std::min(n_sites, n_total); ++k) {
    if (k > 0) binom = binom * static_cast<std::size_t>(n_sites - k + 1) / static_cast<std::size_t>(k);
    dim += binom * static_cast<std::size_t>(n_total - k + 1);
  }
  return dim;
}

std::size_t index_of(const SectorBasis& basis, const OccupationState& s) { return basis.index_of(s); }

const OccupationState& state_of(const SectorBasis& basis, std::size_t index) {
  return basis.state(index);
}

}  // namespace klsim
