#include "exoforest/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace exoforest {

namespace {

// Streaming mean / standard-error accumulator.
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

double weight_total(int B, double eb, double cc, double sb, double sv) {
  const double wf = B > 1 ? static_cast<double>(B - 1) / B : 0.0;
  return wf * (eb + cc) + (1.0 - wf) * (sb + sv);
}

}  // namespace

PairTerms binary_pair_terms(const ModelSpec& spec, const BinaryState& a,
                            const BinaryState& b, int n) {
  PairTerms t;
  double miss_single = 0.0;
  double miss_pair = 0.0;
  for (int j = 0; j < spec.s; ++j) {
    const double bsq = spec.beta[j] * spec.beta[j];
    if (a.indicator[j] == 0) miss_single += bsq;
    if (a.indicator[j] == 0 && b.indicator[j] == 0) miss_pair += bsq;
    t.unsplit_tree += a.indicator[j] == 0 ? 1.0 : 0.0;
    t.unsplit_forest += (a.indicator[j] == 0 && b.indicator[j] == 0) ? 1.0 : 0.0;
  }
  int shared = 0;
  for (int j = 0; j < spec.d; ++j) shared += std::min(a.indicator[j], b.indicator[j]);
  t.shared_splits = shared;
  t.tree_splits = a.total_splits();
  t.ens_sq_bias = 0.25 * miss_pair;
  t.single_sq_bias = 0.25 * miss_single;
  t.cross_cov = (spec.sigma0_sq + t.ens_sq_bias) * std::ldexp(1.0, shared) / n;
  t.single_var = (spec.sigma0_sq + t.single_sq_bias) * std::ldexp(1.0, t.tree_splits) / n;
  return t;
}

PairTerms uniform_pair_terms(const ModelSpec& spec, const UniformState& a,
                             const UniformState& b, int n) {
  PairTerms t;
  double diag_single = 0.0;
  double diag_pair = 0.0;
  double miss_single = 0.0;
  double miss_pair = 0.0;
  for (int j = 0; j < spec.s; ++j) {
    const double bsq = spec.beta[j] * spec.beta[j];
    const double len = std::ldexp(1.0, -2 * a.counts[j]);
    const double len_pair = std::ldexp(1.0, -2 * std::max(a.counts[j], b.counts[j]));
    diag_single += len;
    diag_pair += len_pair;
    miss_single += bsq * len;
    miss_pair += bsq * len_pair;
  }
  int shared = 0;
  for (int j = 0; j < spec.d; ++j) shared += std::min(a.counts[j], b.counts[j]);
  t.shared_splits = shared;
  t.tree_splits = a.total_splits();
  t.unsplit_tree = diag_single;
  t.unsplit_forest = diag_pair;
  t.ens_sq_bias = miss_pair / 12.0;
  t.single_sq_bias = miss_single / 12.0;
  t.cross_cov = (spec.sigma0_sq + t.ens_sq_bias) * std::ldexp(1.0, shared) / n;
  t.single_var = (spec.sigma0_sq + t.single_sq_bias) * std::ldexp(1.0, a.depth) / n;
  return t;
}

double remainder_bound(int l, int n) {
  const double p = std::ldexp(1.0, -l);
  return std::ldexp(1.0, l) / (n * std::sqrt(1.0 + (n - 1) * p)) +
         std::pow(1.0 - p, n);
}

namespace {

MseBreakdown mse_terms_impl(ProcessKind kind, const ModelSpec& spec, double gamma, int l,
                            int B, int n, int reps, std::uint64_t seed) {
  spec.validate();
  if (reps < 1) throw std::invalid_argument("mse_terms: reps must be positive");
  if (B < 1) throw std::invalid_argument("mse_terms: B must be positive");
  if (n < 1) throw std::invalid_argument("mse_terms: n must be positive");

  Welford eb, sb, cc, sv, total;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    PairTerms t;
    if (kind == ProcessKind::Binary) {
      const BinaryState a = sample_binary_process(spec, gamma, l, rng);
      const BinaryState b = sample_binary_process(spec, gamma, l, rng);
      t = binary_pair_terms(spec, a, b, n);
    } else {
      const UniformState a = sample_uniform_process(spec, gamma, l, rng);
      const UniformState b = sample_uniform_process(spec, gamma, l, rng);
      t = uniform_pair_terms(spec, a, b, n);
    }
    eb.add(t.ens_sq_bias);
    sb.add(t.single_sq_bias);
    cc.add(t.cross_cov);
    sv.add(t.single_var);
    total.add(weight_total(B, t.ens_sq_bias, t.cross_cov, t.single_sq_bias, t.single_var));
  }

  MseBreakdown out;
  out.ensemble_sq_bias = eb.mean;
  out.single_sq_bias = sb.mean;
  out.cross_tree_cov = cc.mean;
  out.single_tree_var = sv.mean;
  out.remainder_bound = remainder_bound(l, n);
  out.total_leading = total.mean;
  out.se_ensemble_sq_bias = eb.se();
  out.se_single_sq_bias = sb.se();
  out.se_cross_tree_cov = cc.se();
  out.se_single_tree_var = sv.se();
  out.se_total = total.se();
  out.reps = reps;
  return out;
}

}  // namespace

MseBreakdown binary_mse_terms(const ModelSpec& spec, double gamma, int l, int B, int n,
                              int reps, std::uint64_t seed) {
  return mse_terms_impl(ProcessKind::Binary, spec, gamma, l, B, n, reps, seed);
}

MseBreakdown uniform_mse_terms(const ModelSpec& spec, double gamma, int l, int B, int n,
                               int reps, std::uint64_t seed) {
  return mse_terms_impl(ProcessKind::Uniform, spec, gamma, l, B, n, reps, seed);
}

MseBreakdown mse_terms(ProcessKind kind, const ModelSpec& spec, double gamma, int l, int B,
                       int n, int reps, std::uint64_t seed) {
  return mse_terms_impl(kind, spec, gamma, l, B, n, reps, seed);
}

double convergence_bound(const ModelSpec& spec, double gamma, int l, int n) {
  spec.validate();
  if (l < 0 || n < 1) throw std::invalid_argument("convergence_bound: bad l or n");
  const double factor =
      spec.feature_kind == FeatureKind::BinaryBernoulliHalf ? 0.25 : 1.0 / 12.0;
  const double q = subsample_avoid_prob(spec.d, gamma, spec.s);
  // The per-depth contraction of the unsplit-signal chain gives the depth-l
  // power with the chain started at s signals.
  const double signal = factor * spec.max_beta_sq() * spec.s *
                        std::pow(1.0 - 0.75 * gamma * q, l);
  const double noise = (spec.sigma0_sq + factor * spec.sum_beta_sq()) *
                       std::ldexp(1.0, l) / n;
  return signal + noise;
}

double cross_tree_correlation(ProcessKind kind, const ModelSpec& spec, double gamma, int l,
                              int reps, std::uint64_t seed) {
  spec.validate();
  if (l < 0 || reps < 1) throw std::invalid_argument("cross_tree_correlation: bad l or reps");
  Welford corr;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    int shared = 0;
    if (kind == ProcessKind::Binary) {
      const BinaryState a = sample_binary_process(spec, gamma, l, rng);
      const BinaryState b = sample_binary_process(spec, gamma, l, rng);
      for (int j = 0; j < spec.d; ++j) shared += std::min(a.indicator[j], b.indicator[j]);
    } else {
      const UniformState a = sample_uniform_process(spec, gamma, l, rng);
      const UniformState b = sample_uniform_process(spec, gamma, l, rng);
      for (int j = 0; j < spec.d; ++j) shared += std::min(a.counts[j], b.counts[j]);
    }
    corr.add(std::ldexp(1.0, shared - l));
  }
  return corr.mean;
}

PerfMeasures perf_measures(ProcessKind kind, const ModelSpec& spec, double gamma, int l,
                           int B, int n, int reps, std::uint64_t seed) {
  spec.validate();
  if (reps < 1) throw std::invalid_argument("perf_measures: reps must be positive");

  Welford bias_t, bias_f, unsplit_t, unsplit_f, var_t, cov_f, corr_f, shared_t, shared_f,
      mse_t, mse_f;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    PairTerms t;
    if (kind == ProcessKind::Binary) {
      const BinaryState a = sample_binary_process(spec, gamma, l, rng);
      const BinaryState b = sample_binary_process(spec, gamma, l, rng);
      t = binary_pair_terms(spec, a, b, n);
    } else {
      const UniformState a = sample_uniform_process(spec, gamma, l, rng);
      const UniformState b = sample_uniform_process(spec, gamma, l, rng);
      t = uniform_pair_terms(spec, a, b, n);
    }
    bias_t.add(t.single_sq_bias);
    bias_f.add(t.ens_sq_bias);
    unsplit_t.add(t.unsplit_tree);
    unsplit_f.add(t.unsplit_forest);
    var_t.add(t.single_var);
    cov_f.add(t.cross_cov);
    corr_f.add(std::ldexp(1.0, t.shared_splits - l));
    shared_t.add(t.tree_splits);
    shared_f.add(t.shared_splits);
    mse_t.add(t.single_sq_bias + t.single_var);
    mse_f.add(weight_total(B, t.ens_sq_bias, t.cross_cov, t.single_sq_bias, t.single_var));
  }

  PerfMeasures m;
  m.sq_bias_tree = bias_t.mean;
  m.sq_bias_forest = bias_f.mean;
  m.unsplit_or_diag_tree = unsplit_t.mean;
  m.unsplit_or_diag_forest = unsplit_f.mean;
  m.var_tree = var_t.mean;
  m.cov_forest = cov_f.mean;
  m.corr_tree = 1.0;
  m.corr_forest = corr_f.mean;
  m.shared_splits_tree = shared_t.mean;
  m.shared_splits_forest = shared_f.mean;
  m.mse_tree = mse_t.mean;
  m.mse_forest = mse_f.mean;
  m.se_sq_bias_tree = bias_t.se();
  m.se_sq_bias_forest = bias_f.se();
  m.se_unsplit_tree = unsplit_t.se();
  m.se_unsplit_forest = unsplit_f.se();
  m.se_var_tree = var_t.se();
  m.se_cov_forest = cov_f.se();
  m.se_corr_forest = corr_f.se();
  m.se_shared_tree = shared_t.se();
  m.se_shared_forest = shared_f.se();
  m.se_mse_tree = mse_t.se();
  m.se_mse_forest = mse_f.se();
  m.reps = reps;
  return m;
}

}  // namespace exoforest
