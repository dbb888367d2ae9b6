#pragma once

#include <Eigen/Dense>

#include "exoforest/rng.hpp"

namespace exoforest {

enum class FeatureKind { BinaryBernoulliHalf, UniformUnit };
enum class NoiseKind { Gaussian };

// Sparse linear regression model y = beta_1 x_1 + ... + beta_s x_s + eps,
// with i.i.d. features and homoscedastic noise of variance sigma0_sq.
struct ModelSpec {
  int d = 0;                     // ambient dimension
  int s = 0;                     // sparsity (number of informative coordinates)
  Eigen::VectorXd beta;          // s nonzero coefficients
  double sigma0_sq = 0.0;        // noise variance
  FeatureKind feature_kind = FeatureKind::BinaryBernoulliHalf;

  void validate() const;

  double beta_sq(int j) const { return j < s ? beta[j] * beta[j] : 0.0; }
  double sum_beta_sq() const { return beta.squaredNorm(); }
  double max_beta_sq() const;

  // Simulation configurations: d=100, s=5, sigma0^2=1.69 with equal
  // coefficients 0.5 and with unequal coefficients (2,1.8,1.6,1.4,1.2).
  static ModelSpec config_equal(FeatureKind kind);
  static ModelSpec config_unequal(FeatureKind kind);
};

struct Dataset {
  Eigen::MatrixXd x;  // n x d feature matrix
  Eigen::VectorXd y;  // n responses
  int n = 0;
};

// Regression function mu(x) = sum_{j<s} beta_j x_j.
double regression_mean(const ModelSpec& spec, const Eigen::VectorXd& x);

// Draws n i.i.d. rows; features are Bernoulli(1/2) or Uniform(0,1) per
// coordinate, noise is Gaussian(0, sigma0_sq). Uniform draws are kept in the
// open interval (0,1).
Dataset generate_dataset(const ModelSpec& spec, int n, NoiseKind noise, Rng& rng);

}  // namespace exoforest
