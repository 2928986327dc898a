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

#pragma once

#include <Eigen/Core>
#include <complex>
#include <string>
#include <vector>

namespace mgsf {

struct PhysicalConstants {
  double speed_of_sound = 343.0;  // m/s
  double sample_rate = 16000.0;   // Hz
};

/// Far-field direction of arrival. azimuth in [0, 2pi), elevation in
/// [-pi/2, pi/2]. unit_vector() points from the array toward the source.
struct Direction {
  double azimuth = 0.0;
  double elevation = 0.0;

  Eigen::Vector3d unit_vector() const;
};

/// Named set of 3-D sensor positions (meters). Immutable after construction.
class ArrayGeometry {
 public:
  ArrayGeometry(std::string id, std::vector<Eigen::Vector3d> positions);

  const std::string& id() const { return id_; }
  int num_sensors() const { return static_cast<int>(positions_.size()); }
  const Eigen::Vector3d& position(int m) const { return positions_[m]; }
  const std::vector<Eigen::Vector3d>& positions() const { return positions_; }

 private:
  std::string id_;
  std::vector<Eigen::Vector3d> positions_;
};

/// Symmetric MxM matrix of inter-sensor Euclidean distances in meters.
Eigen::MatrixXd pairwise_distances(const ArrayGeometry& geom);

/// Relative plane-wave arrival delay per sensor, tau_m = -(p_m . u) / c.
/// A sensor closer to the source gets a more negative delay.
Eigen::VectorXd steering_delays(const ArrayGeometry& geom, const Direction& dir,
                                const PhysicalConstants& consts);

/// Array manifold vector v_m = exp(-j * omega * tau_m); every element has
/// unit magnitude.
Eigen::VectorXcd array_manifold(const ArrayGeometry& geom, const Direction& dir,
                                double omega, const PhysicalConstants& consts);

/// Sum over sensor pairs m < n of |D_ref[m][n] - D_test[m][n]| (meters).
/// Throws std::invalid_argument on channel-count mismatch.
double geometry_dissimilarity(const ArrayGeometry& ref,
                              const ArrayGeometry& test);

/// count azimuths spaced 360/count degrees starting at 0, elevation 0.
std::vector<Direction> azimuth_grid(int count);

/// JSON config: {"id": string, "positions_m": [[x,y,z], ...]}.
ArrayGeometry load_geometry_json(const std::string& path);
void save_geometry_json(const ArrayGeometry& geom, const std::string& path);

/// Two sensors on the x axis, spacing meters apart, centered on the origin.
ArrayGeometry make_pair_array(const std::string& id, double spacing);

/// rim_count sensors equi-spaced on a horizontal circle of the given
/// diameter, plus an optional center sensor (listed last).
ArrayGeometry make_circular_array(const std::string& id, double diameter,
                                  int rim_count, bool with_center);

}  // namespace mgsf
