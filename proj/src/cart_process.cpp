#include "exoforest/cart_process.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace exoforest {

namespace {

constexpr double kTieTol = 0x1p-40;  // relative tolerance for impurity ties

// Draws the first m entries of idx as a uniform m-subset of {0,...,d-1}.
void draw_subset(std::vector<int>& idx, int m, Rng& rng) {
  const int d = static_cast<int>(idx.size());
  for (int k = 0; k < m; ++k) {
    std::uniform_int_distribution<int> pick(k, d - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
}

// Uniform choice among the (near-)maximizers of score over idx[0..m).
int pick_argmax(const std::vector<int>& idx, int m,
                const std::vector<double>& score, Rng& rng) {
  double best = 0.0;
  for (int k = 0; k < m; ++k) best = std::max(best, score[idx[k]]);
  const double cutoff = best * (1.0 - kTieTol);
  int ties = 0;
  int chosen = -1;
  for (int k = 0; k < m; ++k) {
    if (score[idx[k]] >= cutoff) {
      ++ties;
      std::uniform_int_distribution<int> keep(1, ties);
      if (keep(rng) == 1) chosen = idx[k];
    }
  }
  return chosen;
}

}  // namespace

int subsample_size(int d, double gamma) {
  if (d <= 0) throw std::invalid_argument("subsample_size: d must be positive");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("subsample_size: gamma must lie in (0,1]");
  const int m = static_cast<int>(std::ceil(gamma * d - 1e-9));
  return std::max(1, std::min(m, d));
}

BinaryState sample_binary_process(const ModelSpec& spec, double gamma, int l, Rng& rng) {
  spec.validate();
  if (spec.feature_kind != FeatureKind::BinaryBernoulliHalf)
    throw std::invalid_argument("sample_binary_process: spec must use binary features");
  const int m = subsample_size(spec.d, gamma);
  if (l < 0 || l >= m)
    throw std::invalid_argument("sample_binary_process: need 0 <= l < ceil(gamma d)");

  BinaryState state;
  state.indicator = Eigen::ArrayXi::Zero(spec.d);
  state.depth = l;

  std::vector<double> score(spec.d, 0.0);
  std::vector<int> idx(spec.d);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> candidates;
  candidates.reserve(m);

  for (int j = 0; j < spec.s; ++j) score[j] = spec.beta[j] * spec.beta[j];

  for (int k = 0; k < l; ++k) {
    draw_subset(idx, m, rng);
    candidates.clear();
    for (int t = 0; t < m; ++t)
      if (state.indicator[idx[t]] == 0) candidates.push_back(idx[t]);
    // l < ceil(gamma d) guarantees an unsplit coordinate in every subsample
    const int j = pick_argmax(candidates, static_cast<int>(candidates.size()), score, rng);
    state.indicator[j] = 1;
  }
  return state;
}

UniformState sample_uniform_process(const ModelSpec& spec, double gamma, int l, Rng& rng) {
  spec.validate();
  if (spec.feature_kind != FeatureKind::UniformUnit)
    throw std::invalid_argument("sample_uniform_process: spec must use uniform features");
  if (l < 0) throw std::invalid_argument("sample_uniform_process: l must be nonnegative");
  const int m = subsample_size(spec.d, gamma);

  UniformState state;
  state.counts = Eigen::ArrayXi::Zero(spec.d);
  state.depth = l;

  std::vector<double> score(spec.d, 0.0);
  std::vector<int> idx(spec.d);
  std::iota(idx.begin(), idx.end(), 0);

  for (int j = 0; j < spec.s; ++j) score[j] = spec.beta[j] * spec.beta[j];

  for (int k = 0; k < l; ++k) {
    draw_subset(idx, m, rng);
    const int j = pick_argmax(idx, m, score, rng);
    state.counts[j] += 1;
    if (j < spec.s) score[j] *= 0.25;  // impurity decrement scales as 4^{-J_j}
  }
  return state;
}

double subsample_avoid_prob(int d, double gamma, int i) {
  const int m = subsample_size(d, gamma);
  if (i < 0) throw std::invalid_argument("subsample_avoid_prob: i must be nonnegative");
  if (i == 0) return 1.0;
  if (m > d - i) return 0.0;
  double q = 1.0;
  for (int k = 0; k < m; ++k) q *= 1.0 - static_cast<double>(i) / (d - k);
  return q;
}

double w_function(int d, double gamma, double x) {
  const int m = subsample_size(d, gamma);
  if (x < 0.0 || x > d - m + 1)
    throw std::invalid_argument("w_function: x out of range [0, d - ceil(gamma d) + 1]");
  double w = 1.0;
  for (int k = 0; k < m; ++k) w *= 1.0 - x / (d - k);
  return w;
}

double BinaryCell::probability() const {
  int pinned = 0;
  for (int j = 0; j < fixed.size(); ++j) pinned += fixed[j] >= 0 ? 1 : 0;
  return std::ldexp(1.0, -pinned);
}

bool BinaryCell::contains(const Eigen::VectorXd& x) const {
  for (int j = 0; j < fixed.size(); ++j)
    if (fixed[j] >= 0 && static_cast<int>(x[j]) != fixed[j]) return false;
  return true;
}

bool DyadicCell::contains(const Eigen::VectorXd& x) const {
  for (int j = 0; j < lower.size(); ++j)
    if (!(x[j] > lower[j] && x[j] <= upper[j])) return false;
  return true;
}

BinaryCell terminal_cell_binary(const Eigen::VectorXd& x0, const BinaryState& state) {
  if (x0.size() != state.indicator.size())
    throw std::invalid_argument("terminal_cell_binary: dimension mismatch");
  BinaryCell cell;
  cell.fixed = Eigen::ArrayXi::Constant(x0.size(), -1);
  for (int j = 0; j < x0.size(); ++j)
    if (state.indicator[j] == 1) cell.fixed[j] = static_cast<int>(x0[j]);
  return cell;
}

DyadicCell terminal_cell_uniform(const Eigen::VectorXd& x0, const UniformState& state) {
  if (x0.size() != state.counts.size())
    throw std::invalid_argument("terminal_cell_uniform: dimension mismatch");
  DyadicCell cell;
  cell.lower.resize(x0.size());
  cell.upper.resize(x0.size());
  for (int j = 0; j < x0.size(); ++j) {
    if (!(x0[j] > 0.0 && x0[j] < 1.0))
      throw std::invalid_argument("terminal_cell_uniform: x0 must lie in (0,1)^d");
    const int mj = state.counts[j];
    const double scale = std::ldexp(1.0, mj);
    const double big_k = std::ceil(x0[j] * scale);
    cell.lower[j] = (big_k - 1.0) / scale;
    cell.upper[j] = big_k / scale;
  }
  return cell;
}

}  // namespace exoforest
