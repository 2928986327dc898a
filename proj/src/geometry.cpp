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

#include "mgsf/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace mgsf {

Eigen::Vector3d Direction::unit_vector() const {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

ArrayGeometry::ArrayGeometry(std::string id,
                             std::vector<Eigen::Vector3d> positions)
    : id_(std::move(id)), positions_(std::move(positions)) {
  if (positions_.empty())
    throw std::invalid_argument("ArrayGeometry: need at least one sensor");
  for (const auto& p : positions_) {
    if (!p.allFinite())
      throw std::invalid_argument("ArrayGeometry: non-finite coordinate");
  }
  // Sensors closer than 1 mm make the diffuse coherence matrix degenerate.
  constexpr double kMinSpacing = 1e-3;
  for (size_t m = 0; m < positions_.size(); ++m) {
    for (size_t n = m + 1; n < positions_.size(); ++n) {
      if ((positions_[m] - positions_[n]).norm() < kMinSpacing)
        throw std::invalid_argument("ArrayGeometry '" + id_ +
                                    "': sensors closer than 1 mm");
    }
  }
}

Eigen::MatrixXd pairwise_distances(const ArrayGeometry& geom) {
  const int m_count = geom.num_sensors();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(m_count, m_count);
  for (int m = 0; m < m_count; ++m) {
    for (int n = m + 1; n < m_count; ++n) {
      dist(m, n) = dist(n, m) = (geom.position(m) - geom.position(n)).norm();
    }
  }
  return dist;
}

Eigen::VectorXd steering_delays(const ArrayGeometry& geom, const Direction& dir,
                                const PhysicalConstants& consts) {
  const Eigen::Vector3d u = dir.unit_vector();
  Eigen::VectorXd tau(geom.num_sensors());
  for (int m = 0; m < geom.num_sensors(); ++m)
    tau[m] = -geom.position(m).dot(u) / consts.speed_of_sound;
  return tau;
}

Eigen::VectorXcd array_manifold(const ArrayGeometry& geom, const Direction& dir,
                                double omega,
                                const PhysicalConstants& consts) {
  if (omega < 0.0) throw std::invalid_argument("array_manifold: omega < 0");
  const Eigen::VectorXd tau = steering_delays(geom, dir, consts);
  Eigen::VectorXcd v(tau.size());
  for (Eigen::Index m = 0; m < tau.size(); ++m)
    v[m] = std::polar(1.0, -omega * tau[m]);
  return v;
}

double geometry_dissimilarity(const ArrayGeometry& ref,
                              const ArrayGeometry& test) {
  if (ref.num_sensors() != test.num_sensors())
    throw std::invalid_argument(
        "geometry_dissimilarity: channel-count mismatch");
  const Eigen::MatrixXd dr = pairwise_distances(ref);
  const Eigen::MatrixXd dt = pairwise_distances(test);
  double sum = 0.0;
  for (int m = 0; m < ref.num_sensors(); ++m)
    for (int n = m + 1; n < ref.num_sensors(); ++n)
      sum += std::abs(dr(m, n) - dt(m, n));
  return sum;
}

std::vector<Direction> azimuth_grid(int count) {
  if (count < 1) throw std::invalid_argument("azimuth_grid: count < 1");
  std::vector<Direction> dirs(count);
  for (int d = 0; d < count; ++d)
    dirs[d] = {2.0 * std::numbers::pi * d / count, 0.0};
  return dirs;
}

ArrayGeometry load_geometry_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open geometry file: " + path);
  nlohmann::json j;
  in >> j;
  std::vector<Eigen::Vector3d> positions;
  for (const auto& p : j.at("positions_m")) {
    if (p.size() != 3)
      throw std::runtime_error("geometry position must have 3 coordinates");
    positions.emplace_back(p[0].get<double>(), p[1].get<double>(),
                           p[2].get<double>());
  }
  return {j.at("id").get<std::string>(), std::move(positions)};
}

void save_geometry_json(const ArrayGeometry& geom, const std::string& path) {
  nlohmann::json j;
  j["id"] = geom.id();
  auto positions = nlohmann::json::array();
  for (const auto& p : geom.positions())
    positions.push_back({p.x(), p.y(), p.z()});
  j["positions_m"] = positions;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write geometry file: " + path);
  out << j.dump(2) << "\n";
}

ArrayGeometry make_pair_array(const std::string& id, double spacing) {
  return {id,
          {Eigen::Vector3d(-spacing / 2, 0, 0),
           Eigen::Vector3d(spacing / 2, 0, 0)}};
}

ArrayGeometry make_circular_array(const std::string& id, double diameter,
                                  int rim_count, bool with_center) {
  std::vector<Eigen::Vector3d> positions;
  const double radius = diameter / 2.0;
  for (int i = 0; i < rim_count; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / rim_count;
    positions.emplace_back(radius * std::cos(phi), radius * std::sin(phi), 0.0);
  }
  if (with_center) positions.emplace_back(0.0, 0.0, 0.0);
  return {id, std::move(positions)};
}

}  // namespace mgsf
