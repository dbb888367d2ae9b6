// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "exoforest/ensemble_core.hpp"
#include "exoforest/mc_harness.hpp"
#include "exoforest/moments.hpp"
#include "exoforest/theory.hpp"

using namespace exoforest;

namespace {

int g_failures = 0;

struct Criterion {
  const char* label;
  std::chrono::steady_clock::time_point start;
  bool ok = true;
  std::string detail;

  explicit Criterion(const char* label_) : label(label_), start(std::chrono::steady_clock::now()) {}

  void require(bool condition, const std::string& what) {
    if (!condition && ok) {
      ok = false;
      detail = what;
    }
  }

  ~Criterion() {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok) {
      std::printf("[PASS] %s (%.2fs)\n", label, elapsed);
    } else {
      std::printf("[FAIL] %s (%.2fs): %s\n", label, elapsed, detail.c_str());
      ++g_failures;
    }
    std::fflush(stdout);
  }
};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void criterion1() {
  Criterion c("criterion 1: depth-5 fixed points of the equal configuration");
  const ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  const PerfMeasures m = perf_measures(ProcessKind::Binary, spec, 1.0, 5, 100, 1000, 200, 1001);
  c.require(m.unsplit_or_diag_tree == 0.0, "tree unsplit signals nonzero");
  c.require(m.unsplit_or_diag_forest == 0.0, "forest unsplit signals nonzero");
  c.require(m.sq_bias_tree == 0.0, "tree squared bias nonzero");
  c.require(m.sq_bias_forest == 0.0, "forest squared bias nonzero");
  c.require(m.corr_forest == 1.0, "cross-tree correlation below one");
}

void criterion2() {
  Criterion c("criterion 2: full-subsample determinism of the unequal configuration");
  const double eps = 1e-14;
  const ModelSpec uspec = ModelSpec::config_unequal(FeatureKind::UniformUnit);
  for (int l = 1; l <= 9; ++l) {
    const MseBreakdown tree = uniform_mse_terms(uspec, 1.0, l, 1, 1000, 50, 2000 + l);
    const MseBreakdown forest = uniform_mse_terms(uspec, 1.0, l, 100, 1000, 50, 2100 + l);
    c.require(close(tree.ensemble_sq_bias, forest.ensemble_sq_bias, eps) &&
                  close(tree.single_sq_bias, forest.single_sq_bias, eps) &&
                  close(tree.ensemble_sq_bias, tree.single_sq_bias, eps),
              "uniform bias fields differ at depth " + std::to_string(l));
    c.require(close(tree.cross_tree_cov, tree.single_tree_var, eps) &&
                  close(tree.single_tree_var, forest.single_tree_var, eps),
              "uniform variance fields differ at depth " + std::to_string(l));
    c.require(close(tree.total_leading, forest.total_leading, eps),
              "uniform totals differ at depth " + std::to_string(l));
    c.require(tree.se_total == 0.0 && forest.se_total == 0.0,
              "uniform chain not deterministic at depth " + std::to_string(l));
  }
  const ModelSpec bspec = ModelSpec::config_unequal(FeatureKind::BinaryBernoulliHalf);
  for (int l = 1; l <= 5; ++l) {
    const MseBreakdown tree = binary_mse_terms(bspec, 1.0, l, 1, 1000, 50, 2200 + l);
    const MseBreakdown forest = binary_mse_terms(bspec, 1.0, l, 100, 1000, 50, 2300 + l);
    c.require(close(tree.ensemble_sq_bias, tree.single_sq_bias, eps) &&
                  close(tree.cross_tree_cov, tree.single_tree_var, eps) &&
                  close(tree.total_leading, forest.total_leading, eps),
              "binary fields differ at depth " + std::to_string(l));
    c.require(tree.se_total == 0.0, "binary chain not deterministic at depth " + std::to_string(l));
  }
}

void criterion3() {
  Criterion c("criterion 3: correlation tail past the signal depth");
  const ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
  const int reps = 10000;
  const PerfMeasures at6 = perf_measures(ProcessKind::Binary, spec, 1.0, 6, 100, 1000, reps, 3001);
  const double expected = 0.5 * (94.0 / 95.0) + 1.0 / 95.0;
  c.require(std::abs(at6.corr_forest - expected) <= 3.0 * at6.se_corr_forest,
            "depth-6 correlation off the exact chain value");
  for (int l = 6; l <= 9; ++l) {
    const double corr = cross_tree_correlation(ProcessKind::Binary, spec, 1.0, l, reps, 3010 + l);
    const double ref = std::ldexp(1.0, -(l - 5));
    c.require(std::abs(corr - ref) <= 0.05,
              "correlation misses the 2^{-(l-5)} profile at depth " + std::to_string(l));
  }
}

void criterion4_and_6() {
  // realization-wise dominance, with the rate bound checked on the same grid
  bool dominance_ok = true;
  bool bound_ok = true;
  std::string dominance_msg, bound_msg;
  {
    Criterion c4("criterion 4: realization-wise forest dominance");
    const int reps = 1000;
    const int n = 1000;
    for (const FeatureKind kind : {FeatureKind::BinaryBernoulliHalf, FeatureKind::UniformUnit}) {
      for (const bool unequal : {false, true}) {
        const ModelSpec spec = unequal ? ModelSpec::config_unequal(kind)
                                       : ModelSpec::config_equal(kind);
        for (int g = 1; g <= 10; ++g) {
          const double gamma = 0.1 * g;
          for (int l = 1; l <= 9; ++l) {
            double total = 0.0, total_sq = 0.0;
            for (int r = 0; r < reps; ++r) {
              Rng rng = make_rng(derive_seed(4001, g, l, static_cast<std::uint64_t>(r)));
              PairTerms t;
              if (kind == FeatureKind::BinaryBernoulliHalf) {
                const BinaryState a = sample_binary_process(spec, gamma, l, rng);
                const BinaryState b = sample_binary_process(spec, gamma, l, rng);
                t = binary_pair_terms(spec, a, b, n);
              } else {
                const UniformState a = sample_uniform_process(spec, gamma, l, rng);
                const UniformState b = sample_uniform_process(spec, gamma, l, rng);
                t = uniform_pair_terms(spec, a, b, n);
              }
              if (t.ens_sq_bias > t.single_sq_bias || t.cross_cov > t.single_var) {
                dominance_ok = false;
                dominance_msg = "dominance violated at gamma " + std::to_string(gamma) +
                                ", depth " + std::to_string(l);
              }
              const double tree_total = t.single_sq_bias + t.single_var;
              total += tree_total;
              total_sq += tree_total * tree_total;
            }
            const double mean = total / reps;
            const double se = std::sqrt(std::max(total_sq / reps - mean * mean, 0.0) / reps);
            if (convergence_bound(spec, gamma, l, n) < mean - 3.0 * se) {
              bound_ok = false;
              bound_msg = "bound below simulation at gamma " + std::to_string(gamma) +
                          ", depth " + std::to_string(l);
            }
          }
        }
      }
    }
    c4.require(dominance_ok, dominance_msg);
  }
  Criterion c6("criterion 6: convergence bound dominates tree leading terms");
  c6.require(bound_ok, bound_msg);
}

void criterion5() {
  Criterion c("criterion 5: empirical GMSE matches the closed-form leading terms");
  ModelSpec spec;
  spec.d = 20;
  spec.s = 3;
  spec.beta = Eigen::VectorXd::Constant(3, 1.0);
  spec.sigma0_sq = 1.0;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  for (double gamma : {0.5, 1.0})
    for (int l = 1; l <= 5; ++l)
      for (int B : {1, 50}) {
        const EmpiricalReport rep = empirical_mse(spec, gamma, l, B, 1000, 256, 500, 5001);
        const double emp = rep.mse_forest_empirical;
        const double thy = rep.mse_forest_theory;
        const double combined = 3.0 * std::sqrt(rep.se_forest_empirical * rep.se_forest_empirical +
                                                rep.se_forest_theory * rep.se_forest_theory);
        const double tol = std::max(combined, rep.remainder_bound);
        c.require(std::abs(emp - thy) <= tol,
                  "mismatch at gamma " + std::to_string(gamma) + ", depth " +
                      std::to_string(l) + ", B " + std::to_string(B) + " (|" +
                      std::to_string(emp) + " - " + std::to_string(thy) + "| > " +
                      std::to_string(tol) + ")");
      }
}

DiscreteSpace random_space(Rng& rng) {
  std::uniform_int_distribution<int> dims(2, 3);
  std::uniform_int_distribution<int> sizes(2, 3);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  DiscreteSpace space;
  const int d = dims(rng);
  for (int j = 0; j < d; ++j) {
    const int k = sizes(rng);
    std::vector<double> sup(k), pr(k);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      sup[i] = i + unif(rng);
      pr[i] = unif(rng);
      total += pr[i];
    }
    for (double& q : pr) q /= total;
    space.supports.push_back(sup);
    space.probs.push_back(pr);
  }
  const double a = unif(rng), b = unif(rng);
  space.mu = [a, b](const Eigen::VectorXd& x) { return a * x[0] * x[0] - b * x[x.size() - 1]; };
  const double cc = unif(rng);
  space.sigma_sq = [cc](const Eigen::VectorXd& x) { return cc + 0.1 * std::abs(x[0]); };
  return space;
}

DiscretePartition random_partition(const DiscreteSpace& space, Rng& rng) {
  const std::int64_t count = space.atom_count();
  std::uniform_int_distribution<int> ncells(1, static_cast<int>(std::min<std::int64_t>(count, 4)));
  for (;;) {
    const int k = ncells(rng);
    std::vector<std::vector<std::int64_t>> cells(k);
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (std::int64_t a = 0; a < count; ++a) cells[pick(rng)].push_back(a);
    std::erase_if(cells, [](const auto& cell) { return cell.empty(); });
    if (!cells.empty()) return make_partition(space, std::move(cells));
  }
}

void criterion7() {
  Criterion c("criterion 7: Cauchy-Schwarz suite over random partition pairs");
  Rng rng = make_rng(7001);
  for (int trial = 0; trial < 1000; ++trial) {
    const DiscreteSpace space = random_space(rng);
    const DiscretePartition p = random_partition(space, rng);
    const DiscretePartition p2 = random_partition(space, rng);
    const CovarianceReport r = covariance_report(space, p, p2);
    c.require(r.corr >= 0.0 && r.corr <= 1.0 + 1e-12, "plain correlation outside [0,1]");
    c.require(r.cov_mu <= std::sqrt(r.var_mu_left * r.var_mu_right) + 1e-12,
              "signal covariance violates Cauchy-Schwarz");
    c.require(r.cov_sigma <= std::sqrt(r.var_sigma_left * r.var_sigma_right) + 1e-12,
              "error covariance violates Cauchy-Schwarz");
    c.require(std::abs(cross_partition_cov(space, p, p) - p.size()) < 1e-9,
              "Cov(P,P) differs from the cell count");
  }
}

void criterion8() {
  Criterion c("criterion 8: inverse-moment lemma oracle grid");
  const double cap = 50.0;
  for (int n : {5, 10, 20, 25})
    for (double p = 0.05; p < 0.96; p += 0.05) {
      const MomentExpansion k1 = keylem1_approx(n, p);
      c.require(std::abs(*k1.exact - k1.leading) <= cap * k1.bound_shape,
                "inverse-count envelope exceeded");
      for (double a : {1.0, 2.0})
        for (int r : {1, 2}) {
          const MomentExpansion m = inverse_power_expansion(n, p, a, r);
          c.require(*m.exact >= m.leading - 1e-14, "inverse-power gap sign violated");
          c.require(std::abs(*m.exact - m.leading - m.second_order) <= cap * m.bound_shape,
                    "inverse-power envelope exceeded");
        }
      ProductParams same;
      same.n = n;
      same.a = 1.0;
      same.b = 2.0;
      same.p1 = p;
      const MomentExpansion sv = product_inverse_expansions(ProductKind::SameVar, same);
      c.require(*sv.exact >= sv.leading - 1e-14, "same-variable gap sign violated");
      c.require(std::abs(*sv.exact - sv.leading - sv.second_order) <= cap * sv.bound_shape,
                "same-variable envelope exceeded");
      if (p <= 0.5) {
        ProductParams disj;
        disj.n = n;
        disj.p1 = p;
        disj.p2 = 0.5 - p + 0.05;
        const MomentExpansion dv = product_inverse_expansions(ProductKind::Disjoint, disj);
        c.require(*dv.exact >= dv.leading - 1e-14, "disjoint gap sign violated");
        c.require(std::abs(*dv.exact - dv.leading - dv.second_order) <= cap * dv.bound_shape,
                  "disjoint envelope exceeded");
      }
      if (2.0 * p - 0.5 * p <= 1.0) {
        ProductParams over;
        over.n = n;
        over.p1 = p;
        over.p2 = p;
        over.p0 = 0.5 * p;
        const MomentExpansion ov = product_inverse_expansions(ProductKind::Overlapping, over);
        c.require(*ov.exact >= ov.leading - 1e-14, "overlapping gap sign violated");
        c.require(std::abs(*ov.exact - ov.leading - ov.second_order) <= cap * ov.bound_shape,
                  "overlapping envelope exceeded");
      }
    }
}

void criterion9() {
  Criterion c("criterion 9: discrete-space calculus agrees with the closed forms");
  ModelSpec spec;
  spec.d = 10;
  spec.s = 3;
  spec.beta = Eigen::VectorXd(3);
  spec.beta << 1.0, 0.8, 0.6;
  spec.sigma0_sq = 1.0;
  spec.feature_kind = FeatureKind::BinaryBernoulliHalf;
  const DiscreteSpace space = DiscreteSpace::binary_model(spec);
  const int n = 200;

  for (double gamma : {0.5, 0.8, 1.0})
    for (int l : {1, 2, 3}) {
      const PartitionRule rule = [&spec, &space, gamma, l](Rng& rng) {
        const BinaryState state = sample_binary_process(spec, gamma, l, rng);
        std::vector<int> coords;
        for (int j = 0; j < spec.d; ++j)
          if (state.indicator[j] == 1) coords.push_back(j);
        return partition_by_coordinates(space, coords);
      };
      const LeadingTermsReport general = theorem42_leading_terms(space, rule, n, 10, 500, 9001);
      const MseBreakdown closed = binary_mse_terms(spec, gamma, l, 10, n, 4000, 9002);
      const auto agree = [&](double a, double sa, double b, double sb, const char* what) {
        const double tol = 3.0 * std::sqrt(sa * sa + sb * sb) + 1e-12;
        c.require(std::abs(a - b) <= tol, std::string(what) + " mismatch at gamma " +
                                              std::to_string(gamma) + ", depth " +
                                              std::to_string(l));
      };
      agree(general.mse.ensemble_sq_bias, general.mse.se_ensemble_sq_bias,
            closed.ensemble_sq_bias, closed.se_ensemble_sq_bias, "ensemble bias");
      agree(general.mse.single_sq_bias, general.mse.se_single_sq_bias, closed.single_sq_bias,
            closed.se_single_sq_bias, "single bias");
      agree(general.mse.cross_tree_cov, general.mse.se_cross_tree_cov, closed.cross_tree_cov,
            closed.se_cross_tree_cov, "cross covariance");
      agree(general.mse.single_tree_var, general.mse.se_single_tree_var,
            closed.single_tree_var, closed.se_single_tree_var, "single variance");
    }
}

void criterion10() {
  Criterion c("criterion 10: forest curves dominate and the MSE is U-shaped");
  const int l = 7;
  const int reps = 1000;
  bool interior_minimum = false;
  for (const FeatureKind kind : {FeatureKind::BinaryBernoulliHalf, FeatureKind::UniformUnit}) {
    const ModelSpec spec = ModelSpec::config_equal(kind);
    const ProcessKind pk =
        kind == FeatureKind::BinaryBernoulliHalf ? ProcessKind::Binary : ProcessKind::Uniform;
    double best_mse = 1e300;
    double best_gamma = 0.0;
    for (int g = 1; g <= 10; ++g) {
      const double gamma = 0.1 * g;
      const PerfMeasures m =
          perf_measures(pk, spec, gamma, l, 100, 1000, reps, derive_seed(10001, g));
      c.require(m.sq_bias_forest <= m.sq_bias_tree + 1e-12, "forest bias above tree bias");
      c.require(m.cov_forest <= m.var_tree + 1e-12, "forest covariance above tree variance");
      c.require(m.mse_forest <= m.mse_tree + 1e-12, "forest MSE above tree MSE");
      if (m.mse_forest < best_mse) {
        best_mse = m.mse_forest;
        best_gamma = gamma;
      }
    }
    if (best_gamma < 0.999) interior_minimum = true;
  }
  c.require(interior_minimum, "no feature kind attains an interior optimal subsampling rate");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4_and_6();
  criterion5();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
