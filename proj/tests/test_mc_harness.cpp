#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "exoforest/mc_harness.hpp"

using namespace exoforest;

TEST_CASE("deterministic binary fit pins the two largest coefficients") {
  const ModelSpec spec = ModelSpec::config_unequal(FeatureKind::BinaryBernoulliHalf);
  Rng rng = make_rng(1);
  const TreePartition part = fit_population_cart_partition(spec, 1.0, 2, rng);
  CHECK(part.binary.indicator[0] == 1);
  CHECK(part.binary.indicator[1] == 1);
  CHECK(part.cell_count_exponent() == 2);

  std::set<std::uint64_t> keys;
  Rng data_rng = make_rng(2);
  const Dataset data = generate_dataset(spec, 200, NoiseKind::Gaussian, data_rng);
  for (int i = 0; i < data.n; ++i) keys.insert(part.cell_key(data.x.row(i).transpose()));
  CHECK(keys.size() == 4);

  // the key depends only on the pinned coordinates
  Eigen::VectorXd a = Eigen::VectorXd::Zero(spec.d);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(spec.d);
  b[0] = 0.0;
  b[1] = 0.0;
  CHECK(part.cell_key(a) == part.cell_key(b));
}

TEST_CASE("depth zero yields a single cell") {
  const ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  Rng rng = make_rng(3);
  const TreePartition part = fit_population_cart_partition(spec, 0.5, 0, rng);
  CHECK(part.cell_count_exponent() == 0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(spec.d);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(spec.d);
  CHECK(part.cell_key(a) == part.cell_key(b));
}

TEST_CASE("uniform cells have dyadic probability two to the minus depth") {
  const ModelSpec spec = ModelSpec::config_equal(FeatureKind::UniformUnit);
  Rng rng = make_rng(4);
  const TreePartition part = fit_population_cart_partition(spec, 0.4, 3, rng);
  CHECK(part.kind == ProcessKind::Uniform);
  const Dataset data = generate_dataset(spec, 50, NoiseKind::Gaussian, rng);
  for (int i = 0; i < data.n; ++i) {
    const DyadicCell cell = terminal_cell_uniform(data.x.row(i).transpose(), part.uniform);
    CHECK(cell.probability() == doctest::Approx(std::ldexp(1.0, -3)));
    // the packed key agrees with the cell membership relation
    CHECK(part.cell_key(data.x.row(i).transpose()) ==
          part.cell_key(Eigen::VectorXd((cell.lower + 0.5 * (cell.upper - cell.lower)).matrix())));
  }
}

TEST_CASE("tree fitting averages responses within cells") {
  ModelSpec spec;
  spec.d = 3;
  spec.s = 1;
  spec.beta = Eigen::VectorXd::Constant(1, 2.0);
  spec.sigma0_sq = 0.0;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  Rng rng = make_rng(5);
  const TreePartition part = fit_population_cart_partition(spec, 1.0, 1, rng);
  CHECK(part.binary.indicator[0] == 1);

  Dataset data;
  data.n = 4;
  data.x.resize(4, 3);
  data.x << 0, 0, 0, 0, 1, 1, 1, 0, 1, 1, 1, 0;
  data.y.resize(4);
  data.y << 0.0, 0.2, 2.0, 1.8;
  const FittedTree tree = fit_tree(part, data);
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd hi = Eigen::VectorXd::Ones(3);
  CHECK(tree.predict(lo) == doctest::Approx(0.1));
  CHECK(tree.predict(hi) == doctest::Approx(1.9));
}

TEST_CASE("empty cells predict zero") {
  ModelSpec spec;
  spec.d = 2;
  spec.s = 1;
  spec.beta = Eigen::VectorXd::Constant(1, 1.0);
  spec.sigma0_sq = 0.0;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  Rng rng = make_rng(6);
  const TreePartition part = fit_population_cart_partition(spec, 1.0, 1, rng);
  Dataset data;
  data.n = 2;
  data.x.resize(2, 2);
  data.x << 0, 0, 0, 1;
  data.y.resize(2);
  data.y << 3.0, 3.0;
  const FittedTree tree = fit_tree(part, data);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  CHECK(tree.predict(ones) == 0.0);
}

TEST_CASE("null model has exactly zero empirical error") {
  ModelSpec spec;
  spec.d = 8;
  spec.s = 0;
  spec.beta = Eigen::VectorXd(0);
  spec.sigma0_sq = 0.0;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  const EmpiricalReport rep = empirical_mse(spec, 0.5, 2, 5, 100, 32, 20, 7);
  CHECK(rep.mse_tree_empirical == 0.0);
  CHECK(rep.mse_forest_empirical == 0.0);
}

TEST_CASE("noiseless distinct-coefficient model is recovered almost perfectly") {
  ModelSpec spec = ModelSpec::config_unequal(FeatureKind::BinaryBernoulliHalf);
  spec.sigma0_sq = 0.0;
  const EmpiricalReport rep = empirical_mse(spec, 1.0, 5, 1, 1000, 64, 30, 9);
  // residual error only from the rare empty-cell events
  CHECK(rep.mse_tree_empirical < 1e-6);
}

TEST_CASE("empirical and theoretical MSE agree at desk scale") {
  ModelSpec spec;
  spec.d = 20;
  spec.s = 3;
  spec.beta = Eigen::VectorXd::Constant(3, 1.0);
  spec.sigma0_sq = 1.0;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  const EmpiricalReport rep = empirical_mse(spec, 1.0, 3, 1, 1000, 128, 150, 11);
  const double tol = std::max(
      3.0 * std::sqrt(rep.se_tree_empirical * rep.se_tree_empirical +
                      rep.se_tree_theory * rep.se_tree_theory),
      rep.remainder_bound);
  CHECK(std::abs(rep.mse_tree_empirical - rep.mse_tree_theory) <= tol);
}

TEST_CASE("forests do not underperform trees across a small grid") {
  ModelSpec spec;
  spec.d = 15;
  spec.s = 3;
  spec.beta = Eigen::VectorXd::Constant(3, 1.0);
  spec.sigma0_sq = 1.0;
  spec.feature_kind = FeatureKind::UniformUnit;
  for (double gamma : {0.3, 0.8}) {
    const EmpiricalReport rep = empirical_mse(spec, gamma, 3, 50, 500, 64, 60, 13);
    const double slack = 3.0 * std::sqrt(rep.se_tree_empirical * rep.se_tree_empirical +
                                         rep.se_forest_empirical * rep.se_forest_empirical);
    CHECK(rep.mse_forest_empirical <= rep.mse_tree_empirical + slack);
  }
}

TEST_CASE("reports are deterministic and flag shallow data") {
  ModelSpec spec;
  spec.d = 10;
  spec.s = 2;
  spec.beta = Eigen::VectorXd::Constant(2, 1.0);
  spec.sigma0_sq = 0.5;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  const EmpiricalReport a = empirical_mse(spec, 0.6, 2, 3, 200, 32, 25, 17);
  const EmpiricalReport b = empirical_mse(spec, 0.6, 2, 3, 200, 32, 25, 17);
  CHECK(a.mse_tree_empirical == b.mse_tree_empirical);
  CHECK(a.mse_forest_empirical == b.mse_forest_empirical);
  CHECK_FALSE(a.shallow_data_warning);
  const EmpiricalReport deep = empirical_mse(spec, 0.6, 5, 2, 100, 16, 5, 17);
  CHECK(deep.shallow_data_warning);
  CHECK(deep.mse_tree_empirical >= 0.0);
}
