#include "exoforest/mc_harness.hpp"

#include <cmath>
#include <stdexcept>

namespace exoforest {

namespace {

struct Welford {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  double se() const {
    return count > 1 ? std::sqrt(m2 / (count - 1) / count) : 0.0;
  }
};

constexpr double kRelErrFloor = 1e-12;

Eigen::VectorXd sample_features(const ModelSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(spec.d);
  for (int j = 0; j < spec.d; ++j) {
    if (spec.feature_kind == FeatureKind::BinaryBernoulliHalf) {
      x[j] = unif(rng) < 0.5 ? 0.0 : 1.0;
    } else {
      double u = unif(rng);
      while (u == 0.0) u = unif(rng);
      x[j] = u;
    }
  }
  return x;
}

}  // namespace

std::uint64_t TreePartition::cell_key(const Eigen::VectorXd& x) const {
  std::uint64_t key = 0;
  if (kind == ProcessKind::Binary) {
    for (int j = 0; j < binary.indicator.size(); ++j)
      if (binary.indicator[j] == 1)
        key = (key << 1) | (x[j] >= 0.5 ? 1u : 0u);
  } else {
    for (int j = 0; j < uniform.counts.size(); ++j) {
      const int c = uniform.counts[j];
      if (c == 0) continue;
      const double scale = std::ldexp(1.0, c);
      // interval index K - 1 in [0, 2^c)
      std::uint64_t idx = static_cast<std::uint64_t>(std::ceil(x[j] * scale)) - 1;
      key = (key << c) | idx;
    }
  }
  return key;
}

int TreePartition::cell_count_exponent() const {
  return kind == ProcessKind::Binary ? binary.total_splits() : uniform.total_splits();
}

TreePartition fit_population_cart_partition(const ModelSpec& spec, double gamma, int l,
                                            Rng& rng) {
  TreePartition part;
  if (spec.feature_kind == FeatureKind::BinaryBernoulliHalf) {
    part.kind = ProcessKind::Binary;
    part.binary = sample_binary_process(spec, gamma, l, rng);
  } else {
    part.kind = ProcessKind::Uniform;
    part.uniform = sample_uniform_process(spec, gamma, l, rng);
  }
  return part;
}

double FittedTree::predict(const Eigen::VectorXd& x) const {
  const auto it = cell_sums.find(partition.cell_key(x));
  if (it == cell_sums.end() || it->second.second == 0) return 0.0;
  return it->second.first / it->second.second;
}

FittedTree fit_tree(const TreePartition& partition, const Dataset& data) {
  FittedTree tree;
  tree.partition = partition;
  tree.cell_sums.reserve(static_cast<std::size_t>(data.n));
  for (int i = 0; i < data.n; ++i) {
    auto& entry = tree.cell_sums[partition.cell_key(data.x.row(i).transpose())];
    entry.first += data.y[i];
    entry.second += 1;
  }
  return tree;
}

EmpiricalReport empirical_mse(const ModelSpec& spec, double gamma, int l, int B, int n,
                              int n_test, int mc_reps, std::uint64_t seed) {
  spec.validate();
  if (B < 1 || n < 1 || n_test < 1 || mc_reps < 1)
    throw std::invalid_argument("empirical_mse: bad arguments");

  Welford tree_mse, forest_mse;
  for (int r = 0; r < mc_reps; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    const Dataset data = generate_dataset(spec, n, NoiseKind::Gaussian, rng);
    std::vector<FittedTree> trees;
    trees.reserve(B);
    for (int b = 0; b < B; ++b)
      trees.push_back(fit_tree(fit_population_cart_partition(spec, gamma, l, rng), data));

    double tree_err = 0.0;
    double forest_err = 0.0;
    for (int t = 0; t < n_test; ++t) {
      const Eigen::VectorXd x = sample_features(spec, rng);
      const double mu = regression_mean(spec, x);
      double avg = 0.0;
      for (const auto& tree : trees) avg += tree.predict(x);
      avg /= B;
      const double dev_tree = mu - trees.front().predict(x);
      const double dev_forest = mu - avg;
      tree_err += dev_tree * dev_tree;
      forest_err += dev_forest * dev_forest;
    }
    tree_mse.add(tree_err / n_test);
    forest_mse.add(forest_err / n_test);
  }

  const ProcessKind kind = spec.feature_kind == FeatureKind::BinaryBernoulliHalf
                               ? ProcessKind::Binary
                               : ProcessKind::Uniform;
  const MseBreakdown theory_tree = mse_terms(kind, spec, gamma, l, 1, n, mc_reps, seed);
  const MseBreakdown theory_forest = mse_terms(kind, spec, gamma, l, B, n, mc_reps, seed);

  EmpiricalReport rep;
  rep.mse_tree_empirical = tree_mse.mean;
  rep.mse_forest_empirical = forest_mse.mean;
  rep.mse_tree_theory = theory_tree.total_leading;
  rep.mse_forest_theory = theory_forest.total_leading;
  rep.rel_err_tree = std::abs(rep.mse_tree_empirical - rep.mse_tree_theory) /
                     std::max(rep.mse_tree_theory, kRelErrFloor);
  rep.rel_err_forest = std::abs(rep.mse_forest_empirical - rep.mse_forest_theory) /
                       std::max(rep.mse_forest_theory, kRelErrFloor);
  rep.se_tree_empirical = tree_mse.se();
  rep.se_forest_empirical = forest_mse.se();
  rep.se_tree_theory = theory_tree.se_total;
  rep.se_forest_theory = theory_forest.se_total;
  rep.remainder_bound = remainder_bound(l, n);
  rep.shallow_data_warning = std::ldexp(1.0, l) > 0.25 * n;
  rep.spec = spec;
  rep.gamma = gamma;
  rep.depth = l;
  rep.B = B;
  rep.n = n;
  rep.n_test = n_test;
  rep.reps = mc_reps;
  rep.seed = seed;
  return rep;
}

}  // namespace exoforest
