#pragma once

#include <Eigen/Dense>

#include "exoforest/model.hpp"
#include "exoforest/rng.hpp"

namespace exoforest {

// State of the binary CART chain: indicator[j] = 1 once coordinate j has been
// split on the root-to-leaf path.
struct BinaryState {
  Eigen::ArrayXi indicator;
  int depth = 0;

  int total_splits() const { return indicator.sum(); }
  int unsplit_informative(int s) const {
    return s - indicator.head(s).sum();
  }
};

// State of the uniform CART chain: counts[j] = number of splits along
// coordinate j on the root-to-leaf path.
struct UniformState {
  Eigen::ArrayXi counts;
  int depth = 0;

  int total_splits() const { return counts.sum(); }
};

// Terminal cell of a binary tree: fixed[j] in {0,1} pins coordinate j to that
// value, fixed[j] = -1 leaves it free.
struct BinaryCell {
  Eigen::ArrayXi fixed;

  double probability() const;
  bool contains(const Eigen::VectorXd& x) const;
};

// Terminal cell of a uniform tree: the dyadic box prod_j (lower_j, upper_j].
struct DyadicCell {
  Eigen::ArrayXd lower;
  Eigen::ArrayXd upper;

  double probability() const { return (upper - lower).prod(); }
  bool contains(const Eigen::VectorXd& x) const;
};

// Size of the feature subsample, ceil(gamma * d) with guarding against
// floating-point spill at exact multiples.
int subsample_size(int d, double gamma);

// One realization of the binary CART chain at depth l. Requires
// l < ceil(gamma d) so that every step splits a fresh coordinate.
BinaryState sample_binary_process(const ModelSpec& spec, double gamma, int l, Rng& rng);

// One realization of the uniform CART chain at depth l.
UniformState sample_uniform_process(const ModelSpec& spec, double gamma, int l, Rng& rng);

// q_i: probability that a subsample of size ceil(gamma d) avoids all of i
// designated coordinates, computed as a telescoping product.
double subsample_avoid_prob(int d, double gamma, int i);

// W_{gamma,d}(x) = (1 - x/d)...(1 - x/(d - ceil(gamma d) + 1)); coincides with
// subsample_avoid_prob at integer x.
double w_function(int d, double gamma, double x);

BinaryCell terminal_cell_binary(const Eigen::VectorXd& x0, const BinaryState& state);
DyadicCell terminal_cell_uniform(const Eigen::VectorXd& x0, const UniformState& state);

}  // namespace exoforest
