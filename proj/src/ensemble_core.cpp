#include "exoforest/ensemble_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace exoforest {

namespace {

constexpr std::int64_t kMaxAtoms = std::int64_t{1} << 22;

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

// Flattened per-atom tables; built once per operation so the exact sums are
// single passes.
struct AtomCache {
  std::vector<double> prob;
  std::vector<double> mu;
  std::vector<double> sig;

  explicit AtomCache(const DiscreteSpace& space) {
    const std::int64_t count = space.atom_count();
    prob.resize(count);
    mu.resize(count);
    sig.resize(count);
    for (std::int64_t a = 0; a < count; ++a) {
      const Eigen::VectorXd x = space.atom_point(a);
      prob[a] = space.atom_prob(a);
      mu[a] = space.mu(x);
      sig[a] = space.sigma_sq(x);
      if (!(sig[a] >= 0.0) || !std::isfinite(mu[a]))
        throw std::invalid_argument("DiscreteSpace: mu must be finite and sigma_sq nonnegative");
    }
  }
};

std::vector<double> cell_mu_means(const AtomCache& cache, const DiscretePartition& p) {
  std::vector<double> means(p.size(), 0.0);
  for (std::size_t a = 0; a < cache.prob.size(); ++a)
    means[p.cell_of_atom[a]] += cache.prob[a] * cache.mu[a];
  for (int i = 0; i < p.size(); ++i) means[i] /= p.cell_prob[i];
  return means;
}

std::int64_t sample_atom(const DiscreteSpace& space, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::int64_t idx = 0;
  for (int j = space.dim() - 1; j >= 0; --j) {
    const double u = unif(rng);
    double acc = 0.0;
    int pick = static_cast<int>(space.probs[j].size()) - 1;
    for (std::size_t k = 0; k < space.probs[j].size(); ++k) {
      acc += space.probs[j][k];
      if (u < acc) {
        pick = static_cast<int>(k);
        break;
      }
    }
    idx = idx * static_cast<std::int64_t>(space.supports[j].size()) + pick;
  }
  return idx;
}

// Displayed remainder expression for one partition, implicit constant 1.
double remainder_expression(const AtomCache& cache, const DiscretePartition& p, int n,
                            int B) {
  double sup_mu = 0.0;
  double sup_sig = 0.0;
  for (std::size_t a = 0; a < cache.prob.size(); ++a) {
    sup_mu = std::max(sup_mu, std::abs(cache.mu[a]));
    sup_sig = std::max(sup_sig, cache.sig[a]);
  }
  double empty = 0.0, half = 0.0, full = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double pi = p.cell_prob[i];
    empty += std::pow(1.0 - pi, n) * pi;
    half += 1.0 / std::sqrt(1.0 + (n - 1) * pi);
    full += 1.0 / (1.0 + (n - 1) * pi);
  }
  const double wf = B > 1 ? static_cast<double>(B - 1) / B : 0.0;
  const double scale = (sup_mu + sup_sig) * (sup_mu + sup_sig);
  return scale * (empty + wf * half / n + full / n);
}

}  // namespace

void DiscreteSpace::validate() const {
  if (supports.empty()) throw std::invalid_argument("DiscreteSpace: empty support");
  if (probs.size() != supports.size())
    throw std::invalid_argument("DiscreteSpace: supports/probs size mismatch");
  std::int64_t count = 1;
  for (std::size_t j = 0; j < supports.size(); ++j) {
    if (supports[j].empty() || supports[j].size() != probs[j].size())
      throw std::invalid_argument("DiscreteSpace: bad coordinate support");
    double total = 0.0;
    for (double q : probs[j]) {
      if (!(q > 0.0)) throw std::invalid_argument("DiscreteSpace: probabilities must be positive");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("DiscreteSpace: probabilities must sum to 1");
    count *= static_cast<std::int64_t>(supports[j].size());
    if (count > kMaxAtoms) throw std::invalid_argument("DiscreteSpace: too many atoms");
  }
  if (!mu || !sigma_sq) throw std::invalid_argument("DiscreteSpace: mu and sigma_sq required");
}

std::int64_t DiscreteSpace::atom_count() const {
  std::int64_t count = 1;
  for (const auto& sup : supports) count *= static_cast<std::int64_t>(sup.size());
  return count;
}

Eigen::VectorXd DiscreteSpace::atom_point(std::int64_t idx) const {
  Eigen::VectorXd x(dim());
  for (int j = 0; j < dim(); ++j) {
    const std::int64_t base = static_cast<std::int64_t>(supports[j].size());
    x[j] = supports[j][idx % base];
    idx /= base;
  }
  return x;
}

double DiscreteSpace::atom_prob(std::int64_t idx) const {
  double p = 1.0;
  for (int j = 0; j < dim(); ++j) {
    const std::int64_t base = static_cast<std::int64_t>(supports[j].size());
    p *= probs[j][idx % base];
    idx /= base;
  }
  return p;
}

std::int64_t DiscreteSpace::atom_index(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("atom_index: dimension mismatch");
  std::int64_t idx = 0;
  for (int j = dim() - 1; j >= 0; --j) {
    const auto& sup = supports[j];
    int pos = -1;
    for (std::size_t k = 0; k < sup.size(); ++k)
      if (sup[k] == x[j]) {
        pos = static_cast<int>(k);
        break;
      }
    if (pos < 0) throw std::invalid_argument("atom_index: point not in space");
    idx = idx * static_cast<std::int64_t>(sup.size()) + pos;
  }
  return idx;
}

DiscreteSpace DiscreteSpace::binary_model(const ModelSpec& spec) {
  spec.validate();
  if (spec.feature_kind != FeatureKind::BinaryBernoulliHalf)
    throw std::invalid_argument("binary_model: spec must use binary features");
  DiscreteSpace space;
  space.supports.assign(spec.d, {0.0, 1.0});
  space.probs.assign(spec.d, {0.5, 0.5});
  const Eigen::VectorXd beta = spec.beta;
  const int s = spec.s;
  space.mu = [beta, s](const Eigen::VectorXd& x) { return beta.dot(x.head(s)); };
  const double sig = spec.sigma0_sq;
  space.sigma_sq = [sig](const Eigen::VectorXd&) { return sig; };
  space.validate();
  return space;
}

DiscretePartition make_partition(const DiscreteSpace& space,
                                 std::vector<std::vector<std::int64_t>> cells) {
  space.validate();
  const std::int64_t count = space.atom_count();
  DiscretePartition p;
  p.cells = std::move(cells);
  p.cell_of_atom.assign(count, -1);
  p.cell_prob.assign(p.cells.size(), 0.0);
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    if (p.cells[i].empty()) throw std::invalid_argument("make_partition: empty cell");
    for (std::int64_t a : p.cells[i]) {
      if (a < 0 || a >= count) throw std::invalid_argument("make_partition: atom out of range");
      if (p.cell_of_atom[a] != -1)
        throw std::invalid_argument("make_partition: cells must be disjoint");
      p.cell_of_atom[a] = static_cast<int>(i);
      p.cell_prob[i] += space.atom_prob(a);
    }
    if (!(p.cell_prob[i] > 0.0))
      throw std::invalid_argument("make_partition: zero-probability cell");
  }
  for (std::int64_t a = 0; a < count; ++a)
    if (p.cell_of_atom[a] == -1)
      throw std::invalid_argument("make_partition: cells must cover the space");
  return p;
}

DiscretePartition partition_by_coordinates(const DiscreteSpace& space,
                                           const std::vector<int>& coords) {
  space.validate();
  for (int j : coords)
    if (j < 0 || j >= space.dim())
      throw std::invalid_argument("partition_by_coordinates: coordinate out of range");
  const std::int64_t count = space.atom_count();
  // key = mixed-radix code of the selected coordinates
  std::vector<std::int64_t> key(count, 0);
  for (std::int64_t a = 0; a < count; ++a) {
    std::int64_t rest = a;
    std::vector<int> digit(space.dim());
    for (int j = 0; j < space.dim(); ++j) {
      const std::int64_t base = static_cast<std::int64_t>(space.supports[j].size());
      digit[j] = static_cast<int>(rest % base);
      rest /= base;
    }
    std::int64_t k = 0;
    for (int j : coords) k = k * static_cast<std::int64_t>(space.supports[j].size()) + digit[j];
    key[a] = k;
  }
  std::vector<std::int64_t> sorted_keys(key);
  std::sort(sorted_keys.begin(), sorted_keys.end());
  sorted_keys.erase(std::unique(sorted_keys.begin(), sorted_keys.end()), sorted_keys.end());
  std::vector<std::vector<std::int64_t>> cells(sorted_keys.size());
  for (std::int64_t a = 0; a < count; ++a) {
    const auto it = std::lower_bound(sorted_keys.begin(), sorted_keys.end(), key[a]);
    cells[it - sorted_keys.begin()].push_back(a);
  }
  return make_partition(space, std::move(cells));
}

DiscreteDataset sample_dataset(const DiscreteSpace& space, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be positive");
  DiscreteDataset data;
  data.n = n;
  data.atom.resize(n);
  data.y.resize(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const std::int64_t a = sample_atom(space, rng);
    data.atom[i] = a;
    const Eigen::VectorXd x = space.atom_point(a);
    data.y[i] = space.mu(x) + std::sqrt(space.sigma_sq(x)) * gauss(rng);
  }
  return data;
}

double partition_estimate(const DiscreteDataset& data, const DiscretePartition& partition,
                          std::int64_t x_atom) {
  const int cell = partition.cell_of_atom[x_atom];
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < data.n; ++i)
    if (partition.cell_of_atom[data.atom[i]] == cell) {
      sum += data.y[i];
      ++count;
    }
  return count > 0 ? sum / count : 0.0;
}

double partition_estimate(const DiscreteSpace& space, const DiscreteDataset& data,
                          const DiscretePartition& partition, const Eigen::VectorXd& x) {
  return partition_estimate(data, partition, space.atom_index(x));
}

double ensemble_estimate(const DiscreteDataset& data,
                         const std::vector<DiscretePartition>& partitions,
                         std::int64_t x_atom) {
  if (partitions.empty()) throw std::invalid_argument("ensemble_estimate: no partitions");
  double total = 0.0;
  for (const auto& p : partitions) total += partition_estimate(data, p, x_atom);
  return total / static_cast<double>(partitions.size());
}

double cross_partition_cov(const DiscreteSpace& space, const DiscretePartition& p,
                           const DiscretePartition& p2) {
  const std::int64_t count = space.atom_count();
  std::vector<double> mass(static_cast<std::size_t>(p.size()) * p2.size(), 0.0);
  for (std::int64_t a = 0; a < count; ++a)
    mass[static_cast<std::size_t>(p.cell_of_atom[a]) * p2.size() + p2.cell_of_atom[a]] +=
        space.atom_prob(a);
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < p2.size(); ++j) {
      const double m = mass[static_cast<std::size_t>(i) * p2.size() + j];
      if (m > 0.0) total += m * m / (p.cell_prob[i] * p2.cell_prob[j]);
    }
  return total;
}

double signal_cov(const DiscreteSpace& space, const DiscretePartition& p,
                  const DiscretePartition& p2) {
  const AtomCache cache(space);
  const std::vector<double> mi = cell_mu_means(cache, p);
  const std::vector<double> mj = cell_mu_means(cache, p2);
  // term_{ij} = E[(mu - m_i)(mu - m'_j) | cap] * M_{ij}^2 / (P_i P'_j)
  //           = S_{ij} * M_{ij} / (P_i P'_j) with S the unnormalized sum
  std::vector<double> mass(static_cast<std::size_t>(p.size()) * p2.size(), 0.0);
  std::vector<double> cross(mass.size(), 0.0);
  for (std::size_t a = 0; a < cache.prob.size(); ++a) {
    const int i = p.cell_of_atom[a];
    const int j = p2.cell_of_atom[a];
    const std::size_t k = static_cast<std::size_t>(i) * p2.size() + j;
    mass[k] += cache.prob[a];
    cross[k] += cache.prob[a] * (cache.mu[a] - mi[i]) * (cache.mu[a] - mj[j]);
  }
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < p2.size(); ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * p2.size() + j;
      if (mass[k] > 0.0) total += cross[k] * mass[k] / (p.cell_prob[i] * p2.cell_prob[j]);
    }
  return total;
}

double error_cov(const DiscreteSpace& space, const DiscretePartition& p,
                 const DiscretePartition& p2) {
  const AtomCache cache(space);
  std::vector<double> mass(static_cast<std::size_t>(p.size()) * p2.size(), 0.0);
  std::vector<double> sig(mass.size(), 0.0);
  for (std::size_t a = 0; a < cache.prob.size(); ++a) {
    const std::size_t k =
        static_cast<std::size_t>(p.cell_of_atom[a]) * p2.size() + p2.cell_of_atom[a];
    mass[k] += cache.prob[a];
    sig[k] += cache.prob[a] * cache.sig[a];
  }
  double total = 0.0;
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < p2.size(); ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * p2.size() + j;
      if (mass[k] > 0.0) total += sig[k] * mass[k] / (p.cell_prob[i] * p2.cell_prob[j]);
    }
  return total;
}

double signal_var(const DiscreteSpace& space, const DiscretePartition& p) {
  const AtomCache cache(space);
  const std::vector<double> means = cell_mu_means(cache, p);
  double total = 0.0;
  for (std::size_t a = 0; a < cache.prob.size(); ++a) {
    const int i = p.cell_of_atom[a];
    const double dev = cache.mu[a] - means[i];
    total += cache.prob[a] * dev * dev / p.cell_prob[i];
  }
  return total;
}

double error_var(const DiscreteSpace& space, const DiscretePartition& p) {
  const AtomCache cache(space);
  double total = 0.0;
  for (std::size_t a = 0; a < cache.prob.size(); ++a)
    total += cache.prob[a] * cache.sig[a] / p.cell_prob[p.cell_of_atom[a]];
  return total;
}

CovarianceReport covariance_report(const DiscreteSpace& space, const DiscretePartition& p,
                                   const DiscretePartition& p2) {
  CovarianceReport r;
  r.cov_plain = cross_partition_cov(space, p, p2);
  r.cov_mu = signal_cov(space, p, p2);
  r.cov_sigma = error_cov(space, p, p2);
  r.var_left = p.size();
  r.var_right = p2.size();
  r.var_mu_left = signal_var(space, p);
  r.var_mu_right = signal_var(space, p2);
  r.var_sigma_left = error_var(space, p);
  r.var_sigma_right = error_var(space, p2);
  r.corr = r.cov_plain / std::sqrt(r.var_left * r.var_right);
  return r;
}

double local_cov(const DiscreteSpace& space, const DiscretePartition& p,
                 const DiscretePartition& p2, std::int64_t x0_atom, LocalKind kind) {
  const AtomCache cache(space);
  const int i = p.cell_of_atom[x0_atom];
  const int j = p2.cell_of_atom[x0_atom];
  double mass = 0.0;
  double mu_num_i = 0.0, mu_num_j = 0.0;
  for (std::int64_t a : p.cells[i]) {
    mu_num_i += cache.prob[a] * cache.mu[a];
    if (p2.cell_of_atom[a] == j) mass += cache.prob[a];
  }
  for (std::int64_t a : p2.cells[j]) mu_num_j += cache.prob[a] * cache.mu[a];
  const double pa = p.cell_prob[i];
  const double pb = p2.cell_prob[j];
  if (mass <= 0.0) return 0.0;
  const double factor = mass / (pa * pb);
  if (kind == LocalKind::Plain) return factor;
  const double mi = mu_num_i / pa;
  const double mj = mu_num_j / pb;
  double moment = 0.0;
  for (std::int64_t a : p.cells[i]) {
    if (p2.cell_of_atom[a] != j) continue;
    if (kind == LocalKind::Mu)
      moment += cache.prob[a] * (cache.mu[a] - mi) * (cache.mu[a] - mj);
    else
      moment += cache.prob[a] * cache.sig[a];
  }
  return (moment / mass) * factor;
}

GmseReport gmse_decompose(const DiscreteSpace& space, const PartitionRule& rule, int n,
                          int B, int mc_reps, std::uint64_t seed, int inner_reps) {
  space.validate();
  if (n < 1 || B < 1 || mc_reps < 1 || inner_reps < 2)
    throw std::invalid_argument("gmse_decompose: bad arguments");

  Welford bias, var, total;
  for (int r = 0; r < mc_reps; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<DiscretePartition> partitions;
    partitions.reserve(B);
    for (int b = 0; b < B; ++b) partitions.push_back(rule(rng));
    const std::int64_t x = sample_atom(space, rng);
    const double mu_x = space.mu(space.atom_point(x));

    Welford inner;
    for (int t = 0; t < inner_reps; ++t) {
      const DiscreteDataset data = sample_dataset(space, n, rng);
      inner.add(ensemble_estimate(data, partitions, x));
    }
    const double inner_var = inner.m2 / (inner.count - 1);
    const double dev = inner.mean - mu_x;
    // subtract the nested-estimation noise from the squared deviation
    const double bias_r = dev * dev - inner_var / inner_reps;
    bias.add(bias_r);
    var.add(inner_var);
    total.add(bias_r + inner_var);
  }

  GmseReport out;
  out.bias_sq = bias.mean;
  out.variance = var.mean;
  out.total = total.mean;
  out.se_bias_sq = bias.se();
  out.se_variance = var.se();
  out.se_total = total.se();
  out.reps = mc_reps;
  return out;
}

LeadingTermsReport theorem42_leading_terms(const DiscreteSpace& space,
                                           const PartitionRule& rule, int n, int B,
                                           int mc_reps, std::uint64_t seed) {
  space.validate();
  if (n < 1 || B < 1 || mc_reps < 1)
    throw std::invalid_argument("theorem42_leading_terms: bad arguments");
  const AtomCache cache(space);

  Welford eb, sb, cc, sv, total, cells, rem;
  for (int r = 0; r < mc_reps; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    const DiscretePartition pa = rule(rng);
    const DiscretePartition pb = rule(rng);

    const std::vector<double> ma = cell_mu_means(cache, pa);
    const std::vector<double> mb = cell_mu_means(cache, pb);
    double eb_r = 0.0;
    double sb_r = 0.0;
    for (std::size_t a = 0; a < cache.prob.size(); ++a) {
      const double da = cache.mu[a] - ma[pa.cell_of_atom[a]];
      const double db = cache.mu[a] - mb[pb.cell_of_atom[a]];
      eb_r += cache.prob[a] * da * db;
      sb_r += cache.prob[a] * da * da;
    }
    const double cc_r = (signal_cov(space, pa, pb) + error_cov(space, pa, pb)) / n;
    const double sv_r = (signal_var(space, pa) + error_var(space, pa)) / n;

    eb.add(eb_r);
    sb.add(sb_r);
    cc.add(cc_r);
    sv.add(sv_r);
    const double wf = B > 1 ? static_cast<double>(B - 1) / B : 0.0;
    total.add(wf * (eb_r + cc_r) + (1.0 - wf) * (sb_r + sv_r));
    cells.add(static_cast<double>(pa.size()) / n);
    rem.add(remainder_expression(cache, pa, n, B));
  }

  LeadingTermsReport out;
  out.mse.ensemble_sq_bias = eb.mean;
  out.mse.single_sq_bias = sb.mean;
  out.mse.cross_tree_cov = cc.mean;
  out.mse.single_tree_var = sv.mean;
  out.mse.total_leading = total.mean;
  out.mse.remainder_bound = rem.mean;
  out.mse.se_ensemble_sq_bias = eb.se();
  out.mse.se_single_sq_bias = sb.se();
  out.mse.se_cross_tree_cov = cc.se();
  out.mse.se_single_tree_var = sv.se();
  out.mse.se_total = total.se();
  out.mse.reps = mc_reps;
  out.mean_cells_over_n = cells.mean;
  out.remainder_report = rem.mean;
  return out;
}

std::vector<ConsistencyRow> consistency_diagnostic(const std::vector<ConsistencyStage>& stages,
                                                   int mc_reps, std::uint64_t seed) {
  if (mc_reps < 1) throw std::invalid_argument("consistency_diagnostic: mc_reps must be positive");
  std::vector<ConsistencyRow> rows;
  rows.reserve(stages.size());
  for (std::size_t sidx = 0; sidx < stages.size(); ++sidx) {
    const auto& stage = stages[sidx];
    stage.space.validate();
    const AtomCache cache(stage.space);
    const std::int64_t count = stage.space.atom_count();

    Welford proj, cells, cov, min_cell;
    std::vector<double> mean_proj(count, 0.0);  // running E_Theta[mu_P] per atom
    for (int r = 0; r < mc_reps; ++r) {
      Rng rng = make_rng(derive_seed(seed, sidx, static_cast<std::uint64_t>(r)));
      const DiscretePartition pa = stage.rule(rng);
      const DiscretePartition pb = stage.rule(rng);
      const std::vector<double> means = cell_mu_means(cache, pa);
      double proj_r = 0.0;
      for (std::int64_t a = 0; a < count; ++a) {
        const double dev = cache.mu[a] - means[pa.cell_of_atom[a]];
        proj_r += cache.prob[a] * dev * dev;
        mean_proj[a] += (means[pa.cell_of_atom[a]] - mean_proj[a]) / (r + 1);
      }
      proj.add(proj_r);
      cells.add(static_cast<double>(pa.size()) / stage.n);
      cov.add(cross_partition_cov(stage.space, pa, pb) / stage.n);
      double mc = std::numeric_limits<double>::infinity();
      for (double q : pa.cell_prob) mc = std::min(mc, stage.n * q);
      min_cell.add(mc);
    }
    double forest_proj = 0.0;
    for (std::int64_t a = 0; a < count; ++a) {
      const double dev = cache.mu[a] - mean_proj[a];
      forest_proj += cache.prob[a] * dev * dev;
    }

    ConsistencyRow row;
    row.n = stage.n;
    row.tree_proj_error = proj.mean;
    row.cells_over_n = cells.mean;
    row.forest_proj_error = forest_proj;
    row.cov_over_n = cov.mean;
    row.min_cell_expected = min_cell.mean;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace exoforest
