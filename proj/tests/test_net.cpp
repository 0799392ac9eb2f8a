#include <doctest.h>

#include "coms/acceptance.hpp"
#include "coms/net.hpp"
#include "helpers.hpp"

using namespace coms;
using namespace coms::test;

TEST_CASE("leaky_relu passes positives and scales negatives") {
  CHECK(leaky_relu(5.0, 0.3) == 5.0);
  CHECK(leaky_relu(0.0, 0.3) == 0.0);
  CHECK(leaky_relu(-1.0, 0.3) == doctest::Approx(-0.3));
}

TEST_CASE("forward on hand-built networks") {
  SUBCASE("zero weights output the final bias") {
    const auto m = model_of({{Matrix::Zero(3, 2), Vector::Zero(3)}, {Matrix::Zero(1, 3), vec({1.25})}});
    CHECK(m.forward(vec({4.0, -7.0})) == 1.25);
  }
  SUBCASE("single linear layer") {
    const auto m = model_of({{mat({{2.0}}), vec({0.0})}});
    CHECK(m.forward(vec({3.0})) == 6.0);
  }
  SUBCASE("one hidden unit applies the leak") {
    const auto m = model_of({{mat({{1.0}}), vec({0.0})}, {mat({{1.0}}), vec({0.0})}}, 0.3);
    CHECK(m.forward(vec({-2.0})) == doctest::Approx(-0.6));
  }
  SUBCASE("batch matches per-column forward") {
    std::mt19937_64 rng(1);
    const std::vector<int> hidden{7, 5};
    const auto m = ObjectiveModel::make_mlp(4, hidden, 9);
    const Matrix xs = random_matrix(4, 6, rng);
    const Vector batch = m.forward_batch(xs);
    for (Eigen::Index i = 0; i < xs.cols(); ++i) CHECK(batch(i) == doctest::Approx(m.forward(xs.col(i))));
  }
}

TEST_CASE("constructor rejects malformed layers") {
  CHECK_THROWS_AS(ObjectiveModel(std::vector<DenseLayer>{}), ContractViolation);
  CHECK_THROWS_AS(model_of({{Matrix::Zero(2, 1), Vector::Zero(2)}}), ContractViolation);
  CHECK_THROWS_AS(model_of({{Matrix::Zero(1, 2), Vector::Zero(2)}}), ContractViolation);
  CHECK_THROWS_AS(model_of({{Matrix::Zero(3, 2), Vector::Zero(3)}, {Matrix::Zero(1, 2), Vector::Zero(1)}}),
                  ContractViolation);
  CHECK_THROWS_AS(model_of({{mat({{1.0}}), vec({0.0})}}, 1.5), ContractViolation);
  const auto m = model_of({{mat({{1.0, 1.0}}), vec({0.0})}});
  CHECK_THROWS_AS((void)m.forward(vec({1.0})), ContractViolation);
}

TEST_CASE("make_mlp uses the He-uniform bound and zero biases") {
  const std::vector<int> hidden{64, 64};
  const auto m = ObjectiveModel::make_mlp(10, hidden, 42);
  REQUIRE(m.layers().size() == 3);
  for (const DenseLayer& layer : m.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in()));
    CHECK(layer.weights.cwiseAbs().maxCoeff() <= bound);
    CHECK(layer.bias.isZero(0.0));
  }
  CHECK(m.parameter_count() == 10 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
  const auto again = ObjectiveModel::make_mlp(10, hidden, 42);
  CHECK(flatten(again.layers()) == flatten(m.layers()));
  const auto other = ObjectiveModel::make_mlp(10, hidden, 43);
  CHECK(flatten(other.layers()) != flatten(m.layers()));
}

TEST_CASE("flatten and unflatten are inverse") {
  const std::vector<int> hidden{3};
  const auto m = ObjectiveModel::make_mlp(2, hidden, 5);
  ParameterSet copy = zeros_like(m.layers());
  unflatten(flatten(m.layers()), copy);
  CHECK(flatten(copy) == flatten(m.layers()));
  CHECK_THROWS_AS(unflatten(Vector::Zero(3), copy), ContractViolation);
}

TEST_CASE("param_gradients hand examples") {
  SUBCASE("linear model, squared error") {
    const auto m = linear_model(vec({1.0}));
    const LossBatch batch{mat({{2.0}}), vec({0.0}), vec({1.0})};
    const ParameterSet g = m.param_gradients(batch, LossKind::kHalfSquaredError);
    CHECK(g[0].weights(0, 0) == 4.0);
    CHECK(g[0].bias(0) == 2.0);
  }
  SUBCASE("signed linear loss is the parameter derivative of f") {
    const auto m = model_of({{mat({{1.5}, {-0.5}}), vec({0.1, 0.2})}, {mat({{2.0, 3.0}}), vec({0.0})}}, 0.3);
    const LossBatch batch{mat({{1.0}}), vec({123.0}), vec({1.0})};
    const ParameterSet g = m.param_gradients(batch, LossKind::kSignedLinear);
    // hidden pre-activations 1.6 (active) and -0.3 (leaky)
    CHECK(g[1].weights(0, 0) == doctest::Approx(1.6));
    CHECK(g[1].weights(0, 1) == doctest::Approx(-0.09));
    CHECK(g[1].bias(0) == doctest::Approx(1.0));
    CHECK(g[0].weights(0, 0) == doctest::Approx(2.0));
    CHECK(g[0].weights(1, 0) == doctest::Approx(0.9));
    CHECK(g[0].bias(1) == doctest::Approx(0.9));
  }
  SUBCASE("weights scale each term and the result is a mean") {
    const auto m = linear_model(vec({1.0}));
    const LossBatch batch{mat({{2.0, 4.0}}), vec({0.0, 0.0}), vec({1.0, 0.0})};
    const ParameterSet g = m.param_gradients(batch, LossKind::kHalfSquaredError);
    CHECK(g[0].weights(0, 0) == 2.0);
  }
  SUBCASE("empty or mismatched batches are rejected") {
    const auto m = linear_model(vec({1.0}));
    CHECK_THROWS_AS((void)m.param_gradients(LossBatch{Matrix(1, 0), Vector(0), Vector(0)},
                                            LossKind::kHalfSquaredError),
                    ContractViolation);
    CHECK_THROWS_AS((void)m.param_gradients(LossBatch{mat({{1.0}}), vec({1.0, 2.0}), vec({1.0})},
                                            LossKind::kHalfSquaredError),
                    ContractViolation);
  }
}

TEST_CASE("param_gradients match central finite differences") {
  std::mt19937_64 rng(11);
  const std::vector<int> hidden{6, 4};
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = ObjectiveModel::make_mlp(3, hidden, static_cast<std::uint64_t>(trial));
    const LossBatch batch{random_matrix(3, 5, rng), random_matrix(5, 1, rng).col(0), Vector::Ones(5)};
    const Vector analytic = flatten(m.param_gradients(batch, LossKind::kHalfSquaredError));
    ObjectiveModel probe = m;
    const Vector numeric = acceptance::finite_difference(
        [&](const Vector& theta) {
          unflatten(theta, probe.mutable_layers());
          const Vector r = probe.forward_batch(batch.designs) - batch.targets;
          return 0.5 * r.squaredNorm() / static_cast<double>(r.size());
        },
        flatten(m.layers()));
    CHECK(acceptance::max_relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("backprop sums weighted output sensitivities") {
  std::mt19937_64 rng(3);
  const std::vector<int> hidden{5};
  const auto m = ObjectiveModel::make_mlp(2, hidden, 1);
  const Matrix xs = random_matrix(2, 4, rng);
  const Vector c = vec({0.5, -1.0, 2.0, 0.25});
  ObjectiveModel probe = m;
  const Vector numeric = acceptance::finite_difference(
      [&](const Vector& theta) {
        unflatten(theta, probe.mutable_layers());
        return c.dot(probe.forward_batch(xs));
      },
      flatten(m.layers()));
  CHECK(acceptance::max_relative_error(flatten(m.backprop(xs, c)), numeric) < 1e-4);
}

TEST_CASE("input_gradient") {
  SUBCASE("linear model has gradient w everywhere") {
    const auto m = linear_model(vec({1.0, -2.0, 0.5}), 3.0);
    CHECK(m.input_gradient(vec({9.0, 1.0, -4.0})) == vec({1.0, -2.0, 0.5}));
  }
  SUBCASE("zero first layer gives zero gradient") {
    const auto m = model_of({{Matrix::Zero(4, 3), vec({1, -1, 2, 0})}, {Matrix::Ones(1, 4), vec({0.0})}});
    CHECK(m.input_gradient(vec({1.0, 2.0, 3.0})).isZero(0.0));
  }
  SUBCASE("finite differences and batch agreement") {
    std::mt19937_64 rng(5);
    const std::vector<int> hidden{16, 16};
    const auto m = ObjectiveModel::make_mlp(6, hidden, 8);
    const Matrix xs = random_matrix(6, 10, rng);
    const Matrix batch = m.input_gradient_batch(xs);
    for (Eigen::Index i = 0; i < xs.cols(); ++i) {
      const Vector x = xs.col(i);
      const Vector numeric = acceptance::finite_difference([&](const Vector& v) { return m.forward(v); }, x);
      CHECK(acceptance::max_relative_error(m.input_gradient(x), numeric) < 1e-4);
      CHECK(acceptance::max_relative_error(batch.col(i), m.input_gradient(x)) < 1e-12);
    }
  }
}

TEST_CASE("adam_step") {
  const auto m = linear_model(vec({1.0, 2.0}), 0.5);
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParameterSet params = m.layers();
    AdamState state = make_adam(params);
    adam_step(state, params, zeros_like(params));
    CHECK(flatten(params) == flatten(m.layers()));
    CHECK(state.step_count == 1);
  }
  SUBCASE("first step moves each parameter by about the learning rate against the sign") {
    ParameterSet params = m.layers();
    AdamState state = make_adam(params, 1e-3);
    ParameterSet g = zeros_like(params);
    g[0].weights << 3.0, -0.01;
    g[0].bias << 50.0;
    adam_step(state, params, g);
    const Vector delta = flatten(params) - flatten(m.layers());
    CHECK(delta(0) == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(delta(1) == doctest::Approx(1e-3).epsilon(1e-5));
    CHECK(delta(2) == doctest::Approx(-1e-3).epsilon(1e-6));
  }
  SUBCASE("two unit-gradient steps follow the bias-corrected recurrence") {
    ParameterSet params = m.layers();
    AdamState state = make_adam(params, 1e-3);
    ParameterSet g = zeros_like(params);
    g[0].weights.setOnes();
    g[0].bias.setOnes();
    adam_step(state, params, g);
    adam_step(state, params, g);
    // hand recurrence
    double mom = 0.0, sec = 0.0, moved = 0.0;
    for (int t = 1; t <= 2; ++t) {
      mom = 0.9 * mom + 0.1;
      sec = 0.999 * sec + 0.001;
      const double mhat = mom / (1.0 - std::pow(0.9, t));
      const double vhat = sec / (1.0 - std::pow(0.999, t));
      moved += 1e-3 * mhat / (std::sqrt(vhat) + 1e-8);
    }
    const double move = std::abs(flatten(params)(0) - flatten(m.layers())(0));
    CHECK(move == doctest::Approx(moved).epsilon(1e-12));
    CHECK(move >= 1.9e-3);
    CHECK(move <= 2.0e-3);
  }
  SUBCASE("non-finite or misshapen gradients leave everything untouched") {
    ParameterSet params = m.layers();
    AdamState state = make_adam(params);
    ParameterSet g = zeros_like(params);
    g[0].weights(0, 0) = std::nan("");
    CHECK_THROWS_AS(adam_step(state, params, g), ContractViolation);
    CHECK(state.step_count == 0);
    CHECK(flatten(params) == flatten(m.layers()));
    CHECK(flatten(state.first_moment).isZero(0.0));
    ParameterSet wrong{DenseLayer{Matrix::Zero(1, 3), Vector::Zero(1)}};
    CHECK_THROWS_AS(adam_step(state, params, wrong), ContractViolation);
    CHECK(state.step_count == 0);
  }
}
