#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "coms/net.hpp"

namespace coms::test {

// Builds a model from a list of (weights, bias) pairs written out by hand.
inline ObjectiveModel model_of(std::vector<std::pair<Matrix, Vector>> layers, double leak = kDefaultLeak) {
  std::vector<DenseLayer> out;
  for (auto& [w, b] : layers) out.push_back(DenseLayer{std::move(w), std::move(b)});
  return ObjectiveModel(std::move(out), leak);
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// f(x) = w.x + b as a one-layer model.
inline ObjectiveModel linear_model(const Vector& w, double b = 0.0) {
  return model_of({{w.transpose(), vec({b})}});
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace coms::test
