#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "exoforest/rng.hpp"
#include "exoforest/theory.hpp"

namespace exoforest {

// Finite discrete product space with user-supplied regression function mu and
// conditional noise variance sigma_sq. The joint law is the product of the
// per-coordinate marginals, so every conditional moment is an exact sum over
// atoms.
struct DiscreteSpace {
  std::vector<std::vector<double>> supports;  // per-coordinate values
  std::vector<std::vector<double>> probs;     // per-coordinate probabilities
  std::function<double(const Eigen::VectorXd&)> mu;
  std::function<double(const Eigen::VectorXd&)> sigma_sq;

  void validate() const;

  int dim() const { return static_cast<int>(supports.size()); }
  std::int64_t atom_count() const;
  Eigen::VectorXd atom_point(std::int64_t idx) const;  // mixed-radix decode
  double atom_prob(std::int64_t idx) const;
  std::int64_t atom_index(const Eigen::VectorXd& x) const;

  // Binary linear model on {0,1}^d with Bernoulli(1/2) coordinates; embeds the
  // closed-form setting so the two calculi can be cross-checked.
  static DiscreteSpace binary_model(const ModelSpec& spec);
};

// Partition of a DiscreteSpace into atom-index cells. Immutable once built.
struct DiscretePartition {
  std::vector<std::vector<std::int64_t>> cells;
  std::vector<int> cell_of_atom;  // indexed by atom, -1 never occurs after validation
  std::vector<double> cell_prob;

  int size() const { return static_cast<int>(cells.size()); }
};

// Validates disjointness, full coverage, and positive cell probabilities.
DiscretePartition make_partition(const DiscreteSpace& space,
                                 std::vector<std::vector<std::int64_t>> cells);

// Partition whose cells are the level sets of the selected coordinates.
DiscretePartition partition_by_coordinates(const DiscreteSpace& space,
                                           const std::vector<int>& coords);

struct DiscreteDataset {
  std::vector<std::int64_t> atom;  // atom index per observation
  Eigen::VectorXd y;
  int n = 0;
};

DiscreteDataset sample_dataset(const DiscreteSpace& space, int n, Rng& rng);

// Cell-mean estimator; an empty cell predicts 0 (the 0/0 = 0 convention).
double partition_estimate(const DiscreteDataset& data, const DiscretePartition& partition,
                          std::int64_t x_atom);
double partition_estimate(const DiscreteSpace& space, const DiscreteDataset& data,
                          const DiscretePartition& partition, const Eigen::VectorXd& x);

double ensemble_estimate(const DiscreteDataset& data,
                         const std::vector<DiscretePartition>& partitions,
                         std::int64_t x_atom);

// Model-independent cross-partition covariance
// sum_{i,j} P(P_i cap P'_j)^2 / (P(P_i) P(P'_j)); equals |p| when p = p2.
double cross_partition_cov(const DiscreteSpace& space, const DiscretePartition& p,
                           const DiscretePartition& p2);

// Signal-induced and model-error-induced global covariance and variance
// functions, all exact sums over atoms.
double signal_cov(const DiscreteSpace& space, const DiscretePartition& p,
                  const DiscretePartition& p2);
double error_cov(const DiscreteSpace& space, const DiscretePartition& p,
                 const DiscretePartition& p2);
double signal_var(const DiscreteSpace& space, const DiscretePartition& p);
double error_var(const DiscreteSpace& space, const DiscretePartition& p);

struct CovarianceReport {
  double cov_plain = 0.0;
  double cov_mu = 0.0;
  double cov_sigma = 0.0;
  double var_left = 0.0, var_right = 0.0;            // model-independent
  double var_mu_left = 0.0, var_mu_right = 0.0;
  double var_sigma_left = 0.0, var_sigma_right = 0.0;
  double corr = 0.0;  // cov_plain / sqrt(var_left var_right)
};

CovarianceReport covariance_report(const DiscreteSpace& space, const DiscretePartition& p,
                                   const DiscretePartition& p2);

enum class LocalKind { Mu, Sigma, Plain };

// Local cross-partition covariance at x0; the Plain variant drops the moment
// factor and reduces to 1/P(cell) when p = p2.
double local_cov(const DiscreteSpace& space, const DiscretePartition& p,
                 const DiscretePartition& p2, std::int64_t x0_atom, LocalKind kind);

using PartitionRule = std::function<DiscretePartition(Rng&)>;

struct GmseReport {
  double bias_sq = 0.0;
  double variance = 0.0;
  double total = 0.0;
  double se_bias_sq = 0.0;
  double se_variance = 0.0;
  double se_total = 0.0;
  int reps = 0;
};

// Nested Monte-Carlo estimate of the bias-variance decomposition that fixes
// the partitions and integrates out the training sample first. The squared
// bias is corrected for inner-loop noise by subtracting the inner sample
// variance divided by inner_reps.
GmseReport gmse_decompose(const DiscreteSpace& space, const PartitionRule& rule, int n,
                          int B, int mc_reps, std::uint64_t seed, int inner_reps = 64);

struct LeadingTermsReport {
  MseBreakdown mse;
  double mean_cells_over_n = 0.0;  // E|P| / n, the uniformity condition proxy
  double remainder_report = 0.0;   // displayed remainder expression, constant 1
};

// Monte Carlo over partition pairs of the four leading MSE terms, with the
// per-pair covariance and variance functions evaluated exactly.
LeadingTermsReport theorem42_leading_terms(const DiscreteSpace& space,
                                           const PartitionRule& rule, int n, int B,
                                           int mc_reps, std::uint64_t seed);

struct ConsistencyRow {
  int n = 0;
  double tree_proj_error = 0.0;    // E[(mu - mu_P)^2]
  double cells_over_n = 0.0;       // E|P| / n
  double forest_proj_error = 0.0;  // E[(mu - E_Theta mu_P)^2]
  double cov_over_n = 0.0;         // E[Cov(P, P')] / n
  double min_cell_expected = 0.0;  // min over cells of n P(cell), averaged
};

struct ConsistencyStage {
  DiscreteSpace space;
  PartitionRule rule;
  int n = 0;
};

std::vector<ConsistencyRow> consistency_diagnostic(const std::vector<ConsistencyStage>& stages,
                                                   int mc_reps, std::uint64_t seed);

}  // namespace exoforest
