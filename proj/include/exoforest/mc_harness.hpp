#pragma once

#include <cstdint>
#include <unordered_map>

#include "exoforest/cart_process.hpp"
#include "exoforest/model.hpp"
#include "exoforest/theory.hpp"

namespace exoforest {

// Population-CART partition handle: stores the sampled process state and maps
// any feature vector to a terminal-cell key without enumerating cells. The
// key packs the pinned bits (binary) or the dyadic interval indices (uniform)
// into at most l bits.
struct TreePartition {
  ProcessKind kind = ProcessKind::Binary;
  BinaryState binary;
  UniformState uniform;

  std::uint64_t cell_key(const Eigen::VectorXd& x) const;
  int cell_count_exponent() const;  // number of key bits; cells = 2^exponent
};

TreePartition fit_population_cart_partition(const ModelSpec& spec, double gamma, int l,
                                            Rng& rng);

// Cell means of one tree on one dataset; empty cells predict 0.
struct FittedTree {
  TreePartition partition;
  std::unordered_map<std::uint64_t, std::pair<double, int>> cell_sums;

  double predict(const Eigen::VectorXd& x) const;
};

FittedTree fit_tree(const TreePartition& partition, const Dataset& data);

struct EmpiricalReport {
  double mse_tree_empirical = 0.0;
  double mse_forest_empirical = 0.0;
  double mse_tree_theory = 0.0;
  double mse_forest_theory = 0.0;
  double rel_err_tree = 0.0;
  double rel_err_forest = 0.0;
  double se_tree_empirical = 0.0;
  double se_forest_empirical = 0.0;
  double se_tree_theory = 0.0;
  double se_forest_theory = 0.0;
  double remainder_bound = 0.0;
  bool shallow_data_warning = false;  // set when 2^l is not small next to n

  ModelSpec spec;
  double gamma = 0.0;
  int depth = 0;
  int B = 0;
  int n = 0;
  int n_test = 0;
  int reps = 0;
  std::uint64_t seed = 0;
};

// Fits B population-CART trees per replication on a fresh dataset and
// estimates the empirical GMSE on fresh test points, next to the closed-form
// leading terms evaluated with matched replication count.
EmpiricalReport empirical_mse(const ModelSpec& spec, double gamma, int l, int B, int n,
                              int n_test, int mc_reps, std::uint64_t seed);

}  // namespace exoforest
