#include <doctest.h>

#include "coms/dataset.hpp"
#include "helpers.hpp"

using namespace coms;
using namespace coms::test;

TEST_CASE("two-point score standardization") {
  const auto stats = fit_normalization(mat({{0.0, 1.0}}), vec({0.0, 2.0}));
  CHECK(stats.y_mean == 1.0);
  CHECK(stats.y_std == 1.0);
  CHECK(stats.normalize_y(0.0) == -1.0);
  CHECK(stats.normalize_y(2.0) == 1.0);
}

TEST_CASE("population standard deviation") {
  const auto stats = fit_normalization(mat({{1.0, 2.0, 3.0}}), vec({1.0, 2.0, 3.0}));
  const double expected = std::sqrt(2.0 / 3.0);
  CHECK(stats.y_mean == doctest::Approx(2.0));
  CHECK(stats.y_std == doctest::Approx(expected));
  CHECK(stats.normalize_y(1.0) == doctest::Approx(-1.224744871391589));
  CHECK(stats.normalize_y(3.0) == doctest::Approx(1.224744871391589));
  CHECK(stats.x_std(0) == doctest::Approx(expected));
}

TEST_CASE("a constant dimension gets unit spread and maps to zero") {
  const auto stats = fit_normalization(mat({{5.0, 5.0, 5.0}, {1.0, 2.0, 3.0}}), vec({0.0, 1.0, 2.0}));
  CHECK(stats.x_std(0) == 1.0);
  const Matrix normalized = stats.normalize_designs(mat({{5.0, 5.0, 5.0}, {1.0, 2.0, 3.0}}));
  CHECK(normalized.row(0).isZero(0.0));
}

TEST_CASE("normalize and denormalize round trip") {
  std::mt19937_64 rng(2);
  const Matrix raw = random_matrix(3, 20, rng) * 4.0;
  const Vector y = random_matrix(20, 1, rng).col(0) * 10.0;
  const auto dataset = OfflineDataset::from_raw(raw, y);
  CHECK((dataset.raw_designs() - raw).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((dataset.raw_scores() - y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(dataset.scores.mean()) < 1e-12);
  for (Eigen::Index i = 0; i < raw.cols(); ++i) {
    const Vector back = dataset.stats.denormalize_x(dataset.stats.normalize_x(raw.col(i)));
    CHECK((back - raw.col(i)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fit_normalization preconditions") {
  CHECK_THROWS_AS((void)fit_normalization(mat({{1.0}}), vec({1.0})), ContractViolation);
  CHECK_THROWS_AS((void)fit_normalization(mat({{1.0, 2.0}}), vec({1.0})), ContractViolation);
  const auto stats = fit_normalization(mat({{1.0, 2.0}}), vec({1.0, 2.0}));
  CHECK_THROWS_AS((void)stats.normalize_x(vec({1.0, 2.0})), ContractViolation);
}

TEST_CASE("discrete datasets check their shape") {
  CHECK_THROWS_AS((void)OfflineDataset::from_raw(Matrix::Zero(5, 3), vec({0, 1, 2}), true, DiscreteShape{2, 2}),
                  ContractViolation);
  const auto ok = OfflineDataset::from_raw(Matrix::Zero(4, 3), vec({0, 1, 2}), true, DiscreteShape{2, 2});
  CHECK(ok.is_discrete);
  CHECK(ok.dim() == 4);
}
