#include <doctest.h>

#include "coms/acceptance.hpp"
#include "coms/baselines.hpp"
#include "coms/tasks.hpp"
#include "helpers.hpp"

using namespace coms;
using namespace coms::test;

TEST_CASE("ensemble forward") {
  const auto one = linear_model(vec({0.0}), 1.0);
  const auto three = linear_model(vec({0.0}), 3.0);
  const DesignVector x = vec({0.4});
  CHECK(Ensemble({one}, Aggregate::kMin).forward(x) == 1.0);
  CHECK(Ensemble({one, three}, Aggregate::kMin).forward(x) == 1.0);
  CHECK(Ensemble({one, three}, Aggregate::kMean).forward(x) == 2.0);
  const Vector batch = Ensemble({one, three}, Aggregate::kMean).forward_batch(mat({{0.0, 1.0}}));
  CHECK(batch == vec({2.0, 2.0}));
  CHECK_THROWS_AS(Ensemble({}, Aggregate::kMin), ContractViolation);
  CHECK_THROWS_AS(Ensemble({one, linear_model(vec({1.0, 1.0}))}, Aggregate::kMin), ContractViolation);
}

TEST_CASE("ensemble input gradient") {
  const auto a = linear_model(vec({1.0, 0.0}), 0.0);
  const auto b = linear_model(vec({0.0, 3.0}), 5.0);
  const DesignVector x = vec({1.0, 1.0});
  SUBCASE("single member") {
    CHECK(Ensemble({b}, Aggregate::kMean).input_gradient(x) == vec({0.0, 3.0}));
  }
  SUBCASE("mean of linear members") {
    CHECK(Ensemble({a, b}, Aggregate::kMean).input_gradient(x) == vec({0.5, 1.5}));
  }
  SUBCASE("min mode follows the lowest member") {
    CHECK(Ensemble({a, b}, Aggregate::kMin).input_gradient(x) == vec({1.0, 0.0}));
    CHECK(Ensemble({b, a}, Aggregate::kMin).input_gradient(x) == vec({1.0, 0.0}));
    const Matrix g = Ensemble({a, b}, Aggregate::kMin).input_gradient_batch(mat({{1.0, 9.0}, {1.0, 0.0}}));
    CHECK(g.col(0) == vec({1.0, 0.0}));
    CHECK(g.col(1) == vec({0.0, 3.0}));
  }
  SUBCASE("mean mode matches finite differences") {
    std::mt19937_64 rng(4);
    const std::vector<int> hidden{8};
    std::vector<ObjectiveModel> members;
    for (std::uint64_t s = 0; s < 3; ++s) members.push_back(ObjectiveModel::make_mlp(3, hidden, s));
    const Ensemble ens(members, Aggregate::kMean);
    for (int t = 0; t < 5; ++t) {
      const Vector p = random_matrix(3, 1, rng).col(0);
      const Vector numeric = acceptance::finite_difference([&](const Vector& v) { return ens.forward(v); }, p);
      CHECK(acceptance::max_relative_error(ens.input_gradient(p), numeric) < 1e-4);
      CHECK(acceptance::max_relative_error(ens.input_gradient_batch(p).col(0), ens.input_gradient(p)) < 1e-12);
    }
  }
}

namespace {

OfflineDataset small_bowl() {
  CurationConfig curation;
  curation.n_raw_samples = 300;
  return curate_dataset(make_bowl(4), curation);
}

}  // namespace

TEST_CASE("naive training is the conservative trainer with alpha pinned at zero") {
  const OfflineDataset data = small_bowl();
  TrainerConfig config = TrainerConfig::defaults_for(data);
  config.epochs = 4;
  config.seed = 5;
  const TrainingResult naive = train_naive(data, config);
  config.alpha_lr = 0.0;
  config.alpha_init = 0.0;
  const TrainingResult coms = train(data, config);
  CHECK(flatten(naive.model.layers()) == flatten(coms.model.layers()));
  for (const EpochLog& row : naive.log) CHECK(row.alpha == 0.0);
  CHECK(naive.log.back().mse < naive.log.front().mse);
}

TEST_CASE("ensemble members use strided seeds") {
  const OfflineDataset data = small_bowl();
  TrainerConfig config = TrainerConfig::defaults_for(data);
  config.epochs = 2;
  config.seed = 3;
  const Ensemble ens = train_ensemble(data, config, 2, Aggregate::kMean);
  REQUIRE(ens.members().size() == 2);
  TrainerConfig second = config;
  second.seed = 3 + kEnsembleSeedStride;
  CHECK(flatten(ens.members()[1].layers()) == flatten(train_naive(data, second).model.layers()));
  CHECK(flatten(ens.members()[0].layers()) == flatten(train_naive(data, config).model.layers()));
  CHECK_THROWS_AS((void)train_ensemble(data, config, 0, Aggregate::kMin), ContractViolation);
}
