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

#include <doctest.h>

#include <algorithm>
#include <functional>

#include "klsim/errors.hpp"
#include "klsim/fockspace.hpp"
#include "oracle.hpp"

using namespace klsim;

namespace {

OccupationState from_tuple(const oracle::Tuple& t) {
  OccupationState s;
  s.n_source = t.front();
  for (std::size_t k = 1; k + 1 < t.size(); ++k) s.sites.push_back(static_cast<std::uint8_t>(t[k]));
  s.n_drain = t.back();
  return s;
}

}  // namespace

TEST_CASE("single particle on one site") {
  const auto b = enumerate_sector(1, 1);
  REQUIRE(b->size() == 3);
  CHECK(b->state(0) == OccupationState{1, {0}, 0});
  CHECK(b->state(1) == OccupationState{0, {1}, 0});
  CHECK(b->state(2) == OccupationState{0, {0}, 1});
}

TEST_CASE("dimensions of the desk-scale sectors") {
  CHECK(enumerate_sector(5, 2)->size() == 23);
  CHECK(enumerate_sector(5, 12)->size() == 336);
}

TEST_CASE("closed form and enumeration match brute force for N <= 5, M <= 12") {
  for (int n = 1; n <= 5; ++n) {
    for (int m = 1; m <= 12; ++m) {
      CAPTURE(n);
      CAPTURE(m);
      auto ref = oracle::brute_force_sector(n, m);
      std::sort(ref.begin(), ref.end(), std::greater<>());
      const auto b = enumerate_sector(n, m);
      REQUIRE(b->size() == ref.size());
      CHECK(sector_dimension(n, m) == ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        REQUIRE(b->state(i) == from_tuple(ref[i]));
      }
    }
  }
}

TEST_CASE("index maps are bijective and deterministic") {
  const auto a = enumerate_sector(5, 7);
  const auto b = enumerate_sector(5, 7);
  REQUIRE(a->size() == b->size());
  for (std::size_t p = 0; p < a->size(); ++p) {
    CHECK(index_of(*a, state_of(*a, p)) == p);
    CHECK(a->state(p) == b->state(p));
    CHECK(a->state(p).total() == 7);
  }
}

TEST_CASE("initial state is first") {
  for (int m : {1, 2, 9}) {
    const auto b = enumerate_sector(5, m);
    CHECK(b->index_of(OccupationState{m, {0, 0, 0, 0, 0}, 0}) == 0);
  }
}

TEST_CASE("lookups outside the sector fail") {
  const auto b = enumerate_sector(5, 2);
  CHECK_THROWS_AS(b->index_of(OccupationState{3, {0, 0, 0, 0, 0}, 0}), NotFound);
  CHECK_THROWS_AS(b->index_of(OccupationState{1, {1, 0, 0}, 0}), NotFound);
  CHECK_FALSE(b->contains(OccupationState{0, {1, 1, 1, 0, 0}, 0}));
  CHECK_THROWS_AS(b->state(23), NotFound);
}

TEST_CASE("zero sizes are rejected") {
  CHECK_THROWS_AS(enumerate_sector(0, 1), InvalidArgument);
  CHECK_THROWS_AS(enumerate_sector(3, 0), InvalidArgument);
}

TEST_CASE("modes and occupations") {
  const OccupationState s{2, {1, 0, 1}, 4};
  CHECK(occupation(s, Mode::source()) == 2);
  CHECK(occupation(s, Mode::site(1)) == 1);
  CHECK(occupation(s, Mode::site(2)) == 0);
  CHECK(occupation(s, Mode::drain()) == 4);
  CHECK_THROWS_AS(occupation(s, Mode::site(4)), InvalidArgument);
  CHECK_THROWS_AS(occupation(s, Mode::site(0)), InvalidArgument);
  CHECK(s.to_string() == "(2|1,0,1|4)");
  const auto b = enumerate_sector(3, 1);
  CHECK(b->modes().size() == 5);
  CHECK(b->has_mode(Mode::site(3)));
  CHECK_FALSE(b->has_mode(Mode::site(4)));
}
