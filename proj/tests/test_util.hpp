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
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace mgsf::testutil {

inline double rel_err(double a, double b) {
  double diff = std::abs(a - b);
  if (diff < 1e-9) return 0.0;
  return diff / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Central-difference gradient check of selected entries of one tensor.
/// loss() must re-evaluate the full forward pass; analytic is the already
/// accumulated gradient. Returns the max relative error over the checked
/// entries.
inline double check_grad_entries(Eigen::MatrixXd& value,
                                 const Eigen::MatrixXd& analytic,
                                 const std::function<double()>& loss,
                                 std::mt19937_64& rng, int max_entries = 24,
                                 double eps = 1e-5) {
  std::vector<Eigen::Index> idx(static_cast<size_t>(value.size()));
  for (Eigen::Index i = 0; i < value.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(max_entries)));
  double worst = 0.0;
  for (Eigen::Index i : idx) {
    double saved = value.data()[i];
    value.data()[i] = saved + eps;
    double up = loss();
    value.data()[i] = saved - eps;
    double down = loss();
    value.data()[i] = saved;
    double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, rel_err(analytic.data()[i], numeric));
  }
  return worst;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c,
                                     std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace mgsf::testutil
