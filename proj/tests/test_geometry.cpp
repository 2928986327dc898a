// Copyright 2026 The mgsf Authors
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

#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "mgsf/geometry.hpp"
#include "test_util.hpp"

using namespace mgsf;

namespace {

ArrayGeometry random_geometry(const std::string& id, int sensors,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.2, 0.2);
  std::vector<Eigen::Vector3d> pos;
  while (static_cast<int>(pos.size()) < sensors) {
    Eigen::Vector3d p(dist(rng), dist(rng), dist(rng));
    bool ok = true;
    for (const auto& q : pos) {
      if ((p - q).norm() < 2e-3) ok = false;
    }
    if (ok) pos.push_back(p);
  }
  return ArrayGeometry(id, pos);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("pairwise distances match hand values") {
  ArrayGeometry geom("pair", {{0.0, 0.0, 0.0}, {0.03, 0.04, 0.0}});
  Eigen::MatrixXd d = pairwise_distances(geom);
  CHECK(d(0, 0) == doctest::Approx(0.0));
  CHECK(d(1, 1) == doctest::Approx(0.0));
  CHECK(d(0, 1) == doctest::Approx(0.05));  // 3-4-5 triangle
  CHECK(d(1, 0) == doctest::Approx(0.05));
}

TEST_CASE("constructor rejects degenerate arrays") {
  CHECK_THROWS(ArrayGeometry("dup", {{0, 0, 0}, {0.0005, 0, 0}}));
  CHECK_THROWS(ArrayGeometry("nan", {{std::nan(""), 0, 0}}));
  CHECK_THROWS(ArrayGeometry("empty", {}));
}

TEST_CASE("steering delays: sensor nearer the source leads") {
  PhysicalConstants consts;
  ArrayGeometry geom("pair", {{-0.05, 0, 0}, {0.05, 0, 0}});
  Direction from_x{0.0, 0.0};  // source on the +x axis
  Eigen::VectorXd tau = steering_delays(geom, from_x, consts);
  // tau_m = -(p_m . u)/c: +x sensor gets -0.05/343, -x sensor +0.05/343.
  CHECK(tau[1] == doctest::Approx(-0.05 / 343.0).epsilon(1e-12));
  CHECK(tau[0] == doctest::Approx(0.05 / 343.0).epsilon(1e-12));

  Direction broadside{M_PI / 2.0, 0.0};  // +y: equidistant
  Eigen::VectorXd tau_b = steering_delays(geom, broadside, consts);
  CHECK(std::abs(tau_b[0] - tau_b[1]) < 1e-15);
}

TEST_CASE("array manifold has unit magnitude and oracle phase") {
  PhysicalConstants consts;
  std::mt19937_64 rng(7);
  ArrayGeometry geom = random_geometry("g", 4, rng);
  Direction dir{1.1, -0.3};
  double omega = 2.0 * M_PI * 1500.0;
  Eigen::VectorXcd v = array_manifold(geom, dir, omega, consts);
  Eigen::VectorXd tau = steering_delays(geom, dir, consts);
  for (int m = 0; m < 4; ++m) {
    CHECK(std::abs(v[m]) == doctest::Approx(1.0).epsilon(1e-12));
    std::complex<double> expect = std::exp(
        std::complex<double>(0.0, -omega * tau[m]));
    CHECK(std::abs(v[m] - expect) < 1e-12);
  }
}

TEST_CASE("dissimilarity is a pseudo-metric on pairwise distance profiles") {
  std::mt19937_64 rng(11);
  ArrayGeometry a = random_geometry("a", 3, rng);
  ArrayGeometry b = random_geometry("b", 3, rng);
  ArrayGeometry c = random_geometry("c", 3, rng);
  CHECK(geometry_dissimilarity(a, a) == doctest::Approx(0.0));
  CHECK(geometry_dissimilarity(a, b) == doctest::Approx(
      geometry_dissimilarity(b, a)));
  CHECK(geometry_dissimilarity(a, b) >= 0.0);
  CHECK(geometry_dissimilarity(a, c) <=
        geometry_dissimilarity(a, b) + geometry_dissimilarity(b, c) + 1e-12);

  // Rigid translation leaves pairwise distances (hence dissimilarity) at 0.
  std::vector<Eigen::Vector3d> moved;
  for (const auto& p : a.positions()) {
    moved.push_back(p + Eigen::Vector3d(1.0, -2.0, 0.5));
  }
  CHECK(geometry_dissimilarity(a, ArrayGeometry("a2", moved)) ==
        doctest::Approx(0.0));

  ArrayGeometry bigger = random_geometry("m4", 4, rng);
  CHECK_THROWS(geometry_dissimilarity(a, bigger));
}

TEST_CASE("azimuth grid covers the circle uniformly") {
  auto dirs = azimuth_grid(12);
  REQUIRE(dirs.size() == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK(dirs[i].azimuth == doctest::Approx(2.0 * M_PI * i / 12.0));
    CHECK(dirs[i].elevation == doctest::Approx(0.0));
  }
}

TEST_CASE("geometry json round trip") {
  std::mt19937_64 rng(3);
  ArrayGeometry geom = random_geometry("roundtrip", 5, rng);
  std::string path =
      (std::filesystem::temp_directory_path() / "mgsf_geom_test.json").string();
  save_geometry_json(geom, path);
  ArrayGeometry back = load_geometry_json(path);
  CHECK(back.id() == geom.id());
  REQUIRE(back.num_sensors() == geom.num_sensors());
  for (int m = 0; m < geom.num_sensors(); ++m) {
    CHECK((back.position(m) - geom.position(m)).norm() < 1e-12);
  }
  std::filesystem::remove(path);
}

TEST_CASE("factory arrays are centered") {
  ArrayGeometry pair = make_pair_array("p", 0.073);
  CHECK(pair.num_sensors() == 2);
  CHECK((pair.position(0) + pair.position(1)).norm() < 1e-12);
  CHECK((pair.position(0) - pair.position(1)).norm() ==
        doctest::Approx(0.073));

  ArrayGeometry circ = make_circular_array("c", 0.072, 6, true);
  CHECK(circ.num_sensors() == 7);
  CHECK(circ.position(6).norm() < 1e-12);  // center sensor last
  for (int m = 0; m < 6; ++m) {
    CHECK(circ.position(m).norm() == doctest::Approx(0.036));
  }
}

}  // TEST_SUITE
