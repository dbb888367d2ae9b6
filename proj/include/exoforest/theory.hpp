#pragma once

#include <cstdint>

#include "exoforest/cart_process.hpp"
#include "exoforest/model.hpp"

namespace exoforest {

enum class ProcessKind { Binary, Uniform };

// Leading MSE terms evaluated on a single pair of independent CART processes.
// The dominance relations ens_sq_bias <= single_sq_bias and
// cross_cov <= single_var hold for every realization by construction.
struct PairTerms {
  double ens_sq_bias = 0.0;    // (joint) ensemble squared-bias term
  double single_sq_bias = 0.0; // single-tree squared bias
  double cross_cov = 0.0;      // cross-tree covariance contribution
  double single_var = 0.0;     // single-tree variance contribution
  int shared_splits = 0;       // sum of min over coordinates
  int tree_splits = 0;         // sum of splits in the first process
  double unsplit_tree = 0.0;   // measure (b), tree column
  double unsplit_forest = 0.0; // measure (b), forest column
};

PairTerms binary_pair_terms(const ModelSpec& spec, const BinaryState& a,
                            const BinaryState& b, int n);
PairTerms uniform_pair_terms(const ModelSpec& spec, const UniformState& a,
                             const UniformState& b, int n);

// Monte-Carlo means of the four leading MSE terms over pairs of independent
// CART processes, with the remainder-shape bound and the B-weighted total.
struct MseBreakdown {
  double ensemble_sq_bias = 0.0;
  double single_sq_bias = 0.0;
  double cross_tree_cov = 0.0;
  double single_tree_var = 0.0;
  double remainder_bound = 0.0;
  double total_leading = 0.0;

  double se_ensemble_sq_bias = 0.0;
  double se_single_sq_bias = 0.0;
  double se_cross_tree_cov = 0.0;
  double se_single_tree_var = 0.0;
  double se_total = 0.0;

  int reps = 0;
};

MseBreakdown binary_mse_terms(const ModelSpec& spec, double gamma, int l, int B, int n,
                              int reps, std::uint64_t seed);
MseBreakdown uniform_mse_terms(const ModelSpec& spec, double gamma, int l, int B, int n,
                               int reps, std::uint64_t seed);
MseBreakdown mse_terms(ProcessKind kind, const ModelSpec& spec, double gamma, int l, int B,
                       int n, int reps, std::uint64_t seed);

// Remainder envelope 2^l / (n (1 + (n-1) 2^{-l})^{1/2}) + (1 - 2^{-l})^n,
// shared by the binary and uniform expansions (implicit constant 1).
double remainder_bound(int l, int n);

// Explicit-constant convergence-rate bound: the signal term decays with the
// depth-l power of (1 - (3/4) gamma q_s) plus the 2^l / n variance envelope.
double convergence_bound(const ModelSpec& spec, double gamma, int l, int n);

// Monte-Carlo mean of 2^{shared splits - l} over process pairs.
double cross_tree_correlation(ProcessKind kind, const ModelSpec& spec, double gamma, int l,
                              int reps, std::uint64_t seed);

// The six simulation performance measures; tree columns use the first process
// of each pair, forest columns the pair interaction.
struct PerfMeasures {
  double sq_bias_tree = 0.0, sq_bias_forest = 0.0;          // (a)
  double unsplit_or_diag_tree = 0.0, unsplit_or_diag_forest = 0.0;  // (b)
  double var_tree = 0.0, cov_forest = 0.0;                  // (c)
  double corr_tree = 1.0, corr_forest = 0.0;                // (d)
  double shared_splits_tree = 0.0, shared_splits_forest = 0.0;  // (e)
  double mse_tree = 0.0, mse_forest = 0.0;                  // (f)

  double se_sq_bias_tree = 0.0, se_sq_bias_forest = 0.0;
  double se_unsplit_tree = 0.0, se_unsplit_forest = 0.0;
  double se_var_tree = 0.0, se_cov_forest = 0.0;
  double se_corr_forest = 0.0;
  double se_shared_tree = 0.0, se_shared_forest = 0.0;
  double se_mse_tree = 0.0, se_mse_forest = 0.0;

  int reps = 0;
};

PerfMeasures perf_measures(ProcessKind kind, const ModelSpec& spec, double gamma, int l,
                           int B, int n, int reps, std::uint64_t seed);

}  // namespace exoforest
