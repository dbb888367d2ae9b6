#include "exoforest/model.hpp"

#include <stdexcept>

namespace exoforest {

void ModelSpec::validate() const {
  if (d <= 0) throw std::invalid_argument("ModelSpec: d must be positive");
  if (s < 0 || s > d) throw std::invalid_argument("ModelSpec: need 0 <= s <= d");
  if (beta.size() != s) throw std::invalid_argument("ModelSpec: beta must have length s");
  for (int j = 0; j < s; ++j)
    if (beta[j] == 0.0) throw std::invalid_argument("ModelSpec: leading coefficients must be nonzero");
  if (sigma0_sq < 0.0) throw std::invalid_argument("ModelSpec: sigma0_sq must be nonnegative");
}

double ModelSpec::max_beta_sq() const {
  return s == 0 ? 0.0 : beta.array().square().maxCoeff();
}

ModelSpec ModelSpec::config_equal(FeatureKind kind) {
  ModelSpec spec;
  spec.d = 100;
  spec.s = 5;
  spec.beta = Eigen::VectorXd::Constant(5, 0.5);
  spec.sigma0_sq = 1.69;
  spec.feature_kind = kind;
  return spec;
}

ModelSpec ModelSpec::config_unequal(FeatureKind kind) {
  ModelSpec spec;
  spec.d = 100;
  spec.s = 5;
  spec.beta = Eigen::VectorXd(5);
  spec.beta << 2.0, 1.8, 1.6, 1.4, 1.2;
  spec.sigma0_sq = 1.69;
  spec.feature_kind = kind;
  return spec;
}

double regression_mean(const ModelSpec& spec, const Eigen::VectorXd& x) {
  if (x.size() != spec.d) throw std::invalid_argument("regression_mean: x has wrong dimension");
  return spec.beta.dot(x.head(spec.s));
}

Dataset generate_dataset(const ModelSpec& spec, int n, NoiseKind /*noise*/, Rng& rng) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be positive");

  Dataset data;
  data.n = n;
  data.x.resize(n, spec.d);
  data.y.resize(n);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma0 = std::sqrt(spec.sigma0_sq);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < spec.d; ++j) {
      if (spec.feature_kind == FeatureKind::BinaryBernoulliHalf) {
        data.x(i, j) = unif(rng) < 0.5 ? 0.0 : 1.0;
      } else {
        double u = unif(rng);
        while (u == 0.0) u = unif(rng);  // keep draws in the open interval
        data.x(i, j) = u;
      }
    }
    const double mu = spec.beta.dot(data.x.row(i).head(spec.s).transpose());
    data.y[i] = mu + sigma0 * gauss(rng);
  }
  return data;
}

}  // namespace exoforest
