#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "exoforest/model.hpp"

using namespace exoforest;

TEST_CASE("named configurations expand to the documented settings") {
  const ModelSpec eq = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  CHECK(eq.d == 100);
  CHECK(eq.s == 5);
  CHECK(eq.sigma0_sq == doctest::Approx(1.69));
  for (int j = 0; j < 5; ++j) CHECK(eq.beta[j] == doctest::Approx(0.5));
  CHECK(eq.sum_beta_sq() == doctest::Approx(1.25));
  CHECK(eq.max_beta_sq() == doctest::Approx(0.25));

  const ModelSpec un = ModelSpec::config_unequal(FeatureKind::UniformUnit);
  CHECK(un.beta[0] == doctest::Approx(2.0));
  CHECK(un.beta[4] == doctest::Approx(1.2));
  CHECK(un.sum_beta_sq() == doctest::Approx(4.0 + 3.24 + 2.56 + 1.96 + 1.44));
}

TEST_CASE("validation rejects malformed specs") {
  ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  spec.d = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  spec.s = 101;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  spec.beta[2] = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  spec.sigma0_sq = -1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("regression mean uses only the informative coordinates") {
  const ModelSpec spec = ModelSpec::config_unequal(FeatureKind::BinaryBernoulliHalf);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(100);
  x[0] = 1.0;
  x[4] = 1.0;
  x[50] = 1.0;  // noise coordinate, must not contribute
  CHECK(regression_mean(spec, x) == doctest::Approx(2.0 + 1.2));
  CHECK_THROWS_AS(regression_mean(spec, Eigen::VectorXd::Zero(99)), std::invalid_argument);
}

TEST_CASE("binary datasets take values in {0,1} with mean near one half") {
  const ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  Rng rng = make_rng(5);
  const Dataset data = generate_dataset(spec, 400, NoiseKind::Gaussian, rng);
  REQUIRE(data.n == 400);
  double mean = 0.0;
  for (int i = 0; i < data.n; ++i)
    for (int j = 0; j < spec.d; ++j) {
      CHECK((data.x(i, j) == 0.0 || data.x(i, j) == 1.0));
      mean += data.x(i, j);
    }
  mean /= 400.0 * spec.d;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform datasets stay in the open unit interval") {
  const ModelSpec spec = ModelSpec::config_equal(FeatureKind::UniformUnit);
  Rng rng = make_rng(6);
  const Dataset data = generate_dataset(spec, 200, NoiseKind::Gaussian, rng);
  for (int i = 0; i < data.n; ++i)
    for (int j = 0; j < spec.d; ++j) {
      CHECK(data.x(i, j) > 0.0);
      CHECK(data.x(i, j) < 1.0);
    }
}

TEST_CASE("responses follow the linear model plus noise") {
  ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  spec.sigma0_sq = 0.0;
  Rng rng = make_rng(7);
  const Dataset data = generate_dataset(spec, 100, NoiseKind::Gaussian, rng);
  for (int i = 0; i < data.n; ++i)
    CHECK(data.y[i] ==
          doctest::Approx(regression_mean(spec, data.x.row(i).transpose())).epsilon(1e-12));
}

TEST_CASE("dataset generation is deterministic under a fixed seed") {
  const ModelSpec spec = ModelSpec::config_unequal(FeatureKind::UniformUnit);
  Rng a = make_rng(99);
  Rng b = make_rng(99);
  const Dataset da = generate_dataset(spec, 50, NoiseKind::Gaussian, a);
  const Dataset db = generate_dataset(spec, 50, NoiseKind::Gaussian, b);
  CHECK(da.x == db.x);
  CHECK(da.y == db.y);
}
