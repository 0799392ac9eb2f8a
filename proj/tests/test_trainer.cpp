#include <doctest.h>

#include "coms/tasks.hpp"
#include "coms/trainer.hpp"
#include "helpers.hpp"

using namespace coms;
using namespace coms::test;

TEST_CASE("com_loss") {
  SUBCASE("hand substitution") {
    const auto m = linear_model(vec({1.0}));
    const ComLoss loss = com_loss(m, mat({{0.0}}), vec({0.0}), mat({{1.0}}), 2.0);
    CHECK(loss.mse == 0.0);
    CHECK(loss.gap == 1.0);
    CHECK(loss.total == 2.0);
  }
  SUBCASE("alpha zero is plain regression") {
    const auto m = linear_model(vec({0.7}), 0.1);
    const ComLoss loss = com_loss(m, mat({{1.0, 2.0}}), vec({0.0, 3.0}), mat({{5.0, 9.0}}), 0.0);
    CHECK(loss.total == loss.mse);
    const double r0 = 0.8, r1 = 1.5 - 3.0;
    CHECK(loss.mse == doctest::Approx(0.25 * (r0 * r0 + r1 * r1)));
  }
  SUBCASE("a constant surrogate has no gap") {
    const auto m = linear_model(vec({0.0}), 2.0);
    const ComLoss loss = com_loss(m, mat({{1.0, 2.0}}), vec({0.0, 1.0}), mat({{10.0, -3.0}}), 4.0);
    CHECK(loss.gap == 0.0);
    CHECK(loss.total == doctest::Approx(0.5 * (4.0 + 1.0) / 2.0));
  }
  SUBCASE("preconditions") {
    const auto m = linear_model(vec({1.0}));
    CHECK_THROWS_AS((void)com_loss(m, mat({{0.0}}), vec({0.0, 1.0}), mat({{1.0}}), 1.0), ContractViolation);
    CHECK_THROWS_AS((void)com_loss(m, mat({{0.0}}), vec({0.0}), mat({{1.0}}), -1.0), ContractViolation);
  }
}

TEST_CASE("dual_update") {
  CHECK(dual_update({0.3, 0.5, 0.01}, 0.5).alpha == 0.3);
  CHECK(dual_update({0.0, 0.5, 0.01}, 0.5 - 5.0).alpha == 0.0);
  CHECK(dual_update({0.5, 0.5, 0.01}, 1.5).alpha == doctest::Approx(0.51));
  const LagrangeState s = dual_update({0.5, 0.5, 0.01}, 1.5);
  CHECK(s.tau == 0.5);
  CHECK(s.alpha_lr == 0.01);
}

TEST_CASE("mine_adversarial follows the ascent recurrence") {
  const auto m = model_of({{mat({{1.0}}), vec({-1.0})}, {mat({{-1.0}}), vec({0.0})}}, 0.5);
  // f(x) = -lrelu(x - 1): slope -1 above 1, -0.5 below
  const auto traj = mine_adversarial(m, vec({0.0}), 0.1, 3);
  CHECK(traj.final_point()(0) == doctest::Approx(-0.15));
}

TEST_CASE("trainer config defaults and validation") {
  const TrainerConfig cont = TrainerConfig::defaults(false, 16);
  CHECK(cont.tau == 0.5);
  CHECK(cont.ascent_rate == doctest::Approx(0.05 * 4.0));
  CHECK(cont.ascent_steps == 50);
  CHECK(cont.epochs == 50);
  CHECK(cont.batch_size == 128);
  CHECK(cont.alpha_lr == 0.01);
  CHECK(cont.alpha_init == 0.0);
  CHECK(cont.adam_lr == 1e-3);
  CHECK(cont.hidden_widths == std::vector<int>{64, 64});
  const TrainerConfig disc = TrainerConfig::defaults(true, 24);
  CHECK(disc.tau == 2.0);
  CHECK(disc.ascent_rate == doctest::Approx(2.0 * std::sqrt(24.0)));

  TrainerConfig bad = cont;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = cont;
  bad.ascent_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = cont;
  bad.alpha_lr = -0.1;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
  bad = cont;
  bad.hidden_widths = {8, 0};
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

namespace {

OfflineDataset line_dataset() { return OfflineDataset::from_raw(mat({{0.0, 1.0}}), vec({0.0, 1.0})); }

TrainerConfig small_config() {
  TrainerConfig config = TrainerConfig::defaults(false, 1);
  config.hidden_widths = {8};
  config.ascent_steps = 5;
  config.adam_lr = 1e-2;
  return config;
}

}  // namespace

TEST_CASE("training fits a two-point dataset") {
  TrainerConfig config = small_config();
  config.alpha_lr = 0.0;
  const TrainingResult result = train(line_dataset(), config);
  REQUIRE(result.log.size() == 50);
  CHECK(result.log.back().mse < result.log.front().mse);
  for (const EpochLog& row : result.log) CHECK(row.alpha == 0.0);
  CHECK(result.log.front().epoch == 1);
}

TEST_CASE("training is deterministic in the seed") {
  const TaskSpec task = make_bowl(4);
  CurationConfig curation;
  curation.n_raw_samples = 300;
  const OfflineDataset data = curate_dataset(task, curation);
  TrainerConfig config = TrainerConfig::defaults_for(data);
  config.epochs = 3;
  config.seed = 17;
  const TrainingResult a = train(data, config);
  const TrainingResult b = train(data, config);
  CHECK(flatten(a.model.layers()) == flatten(b.model.layers()));
  CHECK(a.lagrange.alpha == b.lagrange.alpha);
  config.seed = 18;
  CHECK(flatten(train(data, config).model.layers()) != flatten(a.model.layers()));
}

TEST_CASE("the dual variable responds to the gap") {
  const TaskSpec task = make_bowl(4);
  CurationConfig curation;
  curation.n_raw_samples = 300;
  const OfflineDataset data = curate_dataset(task, curation);
  TrainerConfig config = TrainerConfig::defaults_for(data);
  config.epochs = 5;
  const TrainingResult result = train(data, config);
  // alpha is logged at the end of every epoch and never goes negative
  bool moved = false;
  for (const EpochLog& row : result.log) {
    CHECK(row.alpha >= 0.0);
    moved = moved || row.alpha > 0.0;
  }
  CHECK(moved);
  CHECK(result.lagrange.alpha == result.log.back().alpha);

  TrainerConfig fixed = config;
  fixed.alpha_init = 3.0;
  fixed.alpha_lr = 0.0;
  const TrainingResult pinned = train(data, fixed);
  for (const EpochLog& row : pinned.log) CHECK(row.alpha == 3.0);
}

TEST_CASE("conservatism_gap is the mean prediction change under ascent") {
  const auto m = linear_model(vec({2.0}));
  const OfflineDataset data = line_dataset();
  // every point moves by eta * steps * 2, lifting f by 4 * eta * steps
  CHECK(conservatism_gap(m, data, 0.1, 3) == doctest::Approx(1.2));
}

TEST_CASE("train rejects tiny datasets and bad configs") {
  TrainerConfig config = small_config();
  config.batch_size = 0;
  CHECK_THROWS_AS((void)train(line_dataset(), config), ContractViolation);
}
