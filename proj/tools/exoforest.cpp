#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "exoforest/config.hpp"
#include "exoforest/ensemble_core.hpp"
#include "exoforest/mc_harness.hpp"
#include "exoforest/moments.hpp"
#include "exoforest/theory.hpp"

namespace {

using namespace exoforest;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelftest = 3;

struct CsvRow {
  std::string measure;
  double tree_value = 0.0;
  double forest_value = 0.0;
  double tree_se = 0.0;
  double forest_se = 0.0;
};

struct CellOutput {
  double gamma = 0.0;
  int depth = 0;
  std::uint64_t seed = 0;
  std::vector<CsvRow> rows;
};

std::string fmt(double v, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", precision, v);
  return buffer;
}

ProcessKind process_kind(const ModelSpec& spec) {
  return spec.feature_kind == FeatureKind::BinaryBernoulliHalf ? ProcessKind::Binary
                                                               : ProcessKind::Uniform;
}

std::string kind_name(const ModelSpec& spec) {
  return spec.feature_kind == FeatureKind::BinaryBernoulliHalf ? "binary" : "uniform";
}

int resolve_workers(const ExperimentConfig& cfg, std::optional<int> override_workers) {
  if (override_workers) return std::max(1, *override_workers);
  if (const char* env = std::getenv("EXOFOREST_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return std::max(1, cfg.workers);
}

// Runs one compute function per (gamma, depth) cell on a worker pool; the
// result vector is indexed by cell so output order never depends on
// scheduling.
std::vector<CellOutput> run_grid(const ExperimentConfig& cfg, int workers,
                                 const std::function<std::vector<CsvRow>(
                                     double, int, std::uint64_t)>& compute) {
  struct Cell {
    double gamma;
    int depth;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi)
    for (std::size_t li = 0; li < cfg.depths.size(); ++li)
      cells.push_back({cfg.gammas[gi], cfg.depths[li],
                       derive_seed(cfg.master_seed, gi, li)});

  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= cells.size() || failed.load()) break;
      try {
        outputs[i].gamma = cells[i].gamma;
        outputs[i].depth = cells[i].depth;
        outputs[i].seed = cells[i].seed;
        outputs[i].rows = compute(cells[i].gamma, cells[i].depth, cells[i].seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          try {
            throw;
          } catch (const std::exception& e) {
            first_error = e.what();
          }
        }
      }
    }
  };

  const int pool = std::min<int>(workers, static_cast<int>(cells.size()));
  std::vector<std::thread> threads;
  for (int t = 1; t < pool; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failed.load()) throw std::invalid_argument(first_error);

  std::stable_sort(outputs.begin(), outputs.end(), [](const CellOutput& a, const CellOutput& b) {
    if (a.gamma != b.gamma) return a.gamma < b.gamma;
    return a.depth < b.depth;
  });
  return outputs;
}

void write_grid_csv(std::ostream& out, const ExperimentConfig& cfg,
                    const std::vector<CellOutput>& outputs) {
  out << "kind,config,gamma,depth,B,n,measure,tree_value,forest_value,tree_se,forest_se,"
         "reps,seed\n";
  const int prec = cfg.precision;
  for (const auto& cell : outputs)
    for (const auto& row : cell.rows) {
      for (double v : {row.tree_value, row.forest_value, row.tree_se, row.forest_se})
        if (std::isnan(v)) throw std::runtime_error("NaN in emitted value: " + row.measure);
      out << kind_name(cfg.spec) << ',' << cfg.config_name << ',' << fmt(cell.gamma, prec)
          << ',' << cell.depth << ',' << cfg.B << ',' << cfg.n << ',' << row.measure << ','
          << fmt(row.tree_value, prec) << ',' << fmt(row.forest_value, prec) << ','
          << fmt(row.tree_se, prec) << ',' << fmt(row.forest_se, prec) << ',' << cfg.reps
          << ',' << cell.seed << '\n';
    }
}

std::vector<CsvRow> measures_rows(const ExperimentConfig& cfg, double gamma, int depth,
                                  std::uint64_t seed) {
  const PerfMeasures m = perf_measures(process_kind(cfg.spec), cfg.spec, gamma, depth,
                                       cfg.B, cfg.n, cfg.reps, seed);
  return {
      {"sq_bias", m.sq_bias_tree, m.sq_bias_forest, m.se_sq_bias_tree, m.se_sq_bias_forest},
      {"unsplit_or_diag", m.unsplit_or_diag_tree, m.unsplit_or_diag_forest,
       m.se_unsplit_tree, m.se_unsplit_forest},
      {"var_cov", m.var_tree, m.cov_forest, m.se_var_tree, m.se_cov_forest},
      {"correlation", m.corr_tree, m.corr_forest, 0.0, m.se_corr_forest},
      {"shared_splits", m.shared_splits_tree, m.shared_splits_forest, m.se_shared_tree,
       m.se_shared_forest},
      {"mse", m.mse_tree, m.mse_forest, m.se_mse_tree, m.se_mse_forest},
  };
}

std::vector<CsvRow> theory_rows(const ExperimentConfig& cfg, double gamma, int depth,
                                std::uint64_t seed) {
  const ProcessKind kind = process_kind(cfg.spec);
  const MseBreakdown tree = mse_terms(kind, cfg.spec, gamma, depth, 1, cfg.n, cfg.reps, seed);
  const MseBreakdown forest =
      mse_terms(kind, cfg.spec, gamma, depth, cfg.B, cfg.n, cfg.reps, seed);
  return {
      {"sq_bias", tree.single_sq_bias, forest.ensemble_sq_bias, tree.se_single_sq_bias,
       forest.se_ensemble_sq_bias},
      {"var_cov", tree.single_tree_var, forest.cross_tree_cov, tree.se_single_tree_var,
       forest.se_cross_tree_cov},
      {"total_leading", tree.total_leading, forest.total_leading, tree.se_total,
       forest.se_total},
      {"remainder_bound", tree.remainder_bound, forest.remainder_bound, 0.0, 0.0},
  };
}

std::vector<CsvRow> empirical_rows(const ExperimentConfig& cfg, double gamma, int depth,
                                   std::uint64_t seed) {
  const EmpiricalReport rep = empirical_mse(cfg.spec, gamma, depth, cfg.B, cfg.n,
                                            cfg.n_test, cfg.reps, seed);
  return {
      {"mse_empirical", rep.mse_tree_empirical, rep.mse_forest_empirical,
       rep.se_tree_empirical, rep.se_forest_empirical},
      {"mse_theory", rep.mse_tree_theory, rep.mse_forest_theory, rep.se_tree_theory,
       rep.se_forest_theory},
      {"rel_err", rep.rel_err_tree, rep.rel_err_forest, 0.0, 0.0},
      {"remainder_bound", rep.remainder_bound, rep.remainder_bound, 0.0, 0.0},
  };
}

std::vector<CsvRow> bound_rows(const ExperimentConfig& cfg, double gamma, int depth,
                               std::uint64_t /*seed*/) {
  const double bound = convergence_bound(cfg.spec, gamma, depth, cfg.n);
  return {{"convergence_bound", bound, bound, 0.0, 0.0}};
}

void write_lemmas_csv(std::ostream& out, int precision) {
  out << "lemma,n,p1,p2,p0,a,b,r,s,exact,leading,gap,bound_shape,ratio\n";
  const auto emit = [&](const std::string& lemma, int n, double p1, double p2, double p0,
                        double a, double b, int r, int s, const MomentExpansion& m) {
    if (!m.exact) return;
    const double gap = *m.exact - (m.leading + m.second_order);
    const double ratio = m.bound_shape > 0.0 ? std::abs(gap) / m.bound_shape : 0.0;
    for (double v : {*m.exact, m.leading, gap, m.bound_shape, ratio})
      if (std::isnan(v)) throw std::runtime_error("NaN in lemma sweep");
    out << lemma << ',' << n << ',' << fmt(p1, precision) << ',' << fmt(p2, precision)
        << ',' << fmt(p0, precision) << ',' << fmt(a, precision) << ',' << fmt(b, precision)
        << ',' << r << ',' << s << ',' << fmt(*m.exact, precision) << ','
        << fmt(m.leading, precision) << ',' << fmt(gap, precision) << ','
        << fmt(m.bound_shape, precision) << ',' << fmt(ratio, precision) << '\n';
  };

  const std::vector<int> ns = {5, 10, 20, 25};
  for (int n : ns)
    for (double p = 0.05; p < 0.96; p += 0.1) {
      emit("inverse_count", n, p, 0, 0, 0, 0, 1, 0, keylem1_approx(n, p));
      for (double a : {1.0, 2.0})
        for (int r : {1, 2})
          emit("inverse_power", n, p, 0, 0, a, 0, r, 0, inverse_power_expansion(n, p, a, r));
      ProductParams same;
      same.n = n;
      same.a = 1.0;
      same.b = 2.0;
      same.p1 = p;
      same.r = 1;
      same.s = 1;
      emit("product_same", n, p, p, 0, same.a, same.b, 1, 1,
           product_inverse_expansions(ProductKind::SameVar, same));
      const double q = std::min(0.95 - p + 0.05, p);  // keep p1 + p2 <= 1
      if (q > 0.0 && p + q <= 1.0) {
        ProductParams disj;
        disj.n = n;
        disj.a = 1.0;
        disj.b = 1.0;
        disj.p1 = p;
        disj.p2 = q;
        emit("product_disjoint", n, p, q, 0, 1, 1, 1, 1,
             product_inverse_expansions(ProductKind::Disjoint, disj));
      }
      const double p0 = 0.5 * p;
      if (p + p - p0 <= 1.0) {
        ProductParams over;
        over.n = n;
        over.a = 1.0;
        over.p1 = p;
        over.p2 = p;
        over.p0 = p0;
        emit("product_overlapping", n, p, p, p0, 1, 1, 1, 1,
             product_inverse_expansions(ProductKind::Overlapping, over));
      }
    }
}

int run_selftest() {
  int failures = 0;
  const auto check = [&](bool ok, const char* what) {
    if (!ok) {
      ++failures;
      std::cerr << "selftest failure: " << what << "\n";
    }
  };

  // process invariants
  {
    const ModelSpec spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
    Rng rng = make_rng(7);
    for (int r = 0; r < 200; ++r) {
      const BinaryState state = sample_binary_process(spec, 0.3, 6, rng);
      check(state.total_splits() == 6, "binary process splits once per step");
    }
    const ModelSpec uspec = ModelSpec::config_equal(FeatureKind::UniformUnit);
    for (int r = 0; r < 200; ++r) {
      const UniformState state = sample_uniform_process(uspec, 0.3, 6, rng);
      check(state.total_splits() == 6, "uniform process splits once per step");
    }
    const double corr = cross_tree_correlation(ProcessKind::Binary, spec, 0.5, 4, 200, 11);
    check(corr >= 0.0 && corr <= 1.0, "correlation lies in [0,1]");
  }

  // dominance, realization-wise through the means
  {
    const ModelSpec spec = ModelSpec::config_unequal(FeatureKind::UniformUnit);
    const MseBreakdown m = uniform_mse_terms(spec, 0.4, 5, 100, 1000, 300, 13);
    check(m.ensemble_sq_bias <= m.single_sq_bias + 1e-12, "ensemble bias dominated");
    check(m.cross_tree_cov <= m.single_tree_var + 1e-12, "cross covariance dominated");
  }

  // moment oracles
  {
    const double one = exact_binomial_functional(30, 0.37, [](int) { return 1.0; });
    check(std::abs(one - 1.0) < 1e-12, "binomial weights sum to 1");
    const MomentExpansion k1 = keylem1_approx(3, 0.5);
    check(k1.exact && std::abs(*k1.exact - 29.0 / 48.0) < 1e-12, "inverse-count oracle");
  }

  // partition calculus
  {
    DiscreteSpace space;
    space.supports = {{1.0, 2.0, 3.0, 4.0}};
    space.probs = {{0.25, 0.25, 0.25, 0.25}};
    space.mu = [](const Eigen::VectorXd& x) { return x[0]; };
    space.sigma_sq = [](const Eigen::VectorXd&) { return 1.0; };
    const DiscretePartition p = make_partition(space, {{0, 1}, {2, 3}});
    const DiscretePartition p2 = make_partition(space, {{0}, {1, 2, 3}});
    check(std::abs(cross_partition_cov(space, p, p) - 2.0) < 1e-12, "Cov(P,P) = |P|");
    check(std::abs(cross_partition_cov(space, p, p2) - 4.0 / 3.0) < 1e-12,
          "cross-partition covariance hand example");
  }

  if (failures == 0) {
    std::cout << "selftest: all checks passed\n";
    return 0;
  }
  std::cerr << "selftest: " << failures << " check(s) failed\n";
  return kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exoforest: partitioning-ensemble theory and simulation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> reps_override;
  std::optional<int> workers_override;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "experiment config file");
    if (config_required) opt->required();
    sub->add_option("--out", out_path, "output CSV path (default stdout)");
    sub->add_option("--seed", seed_override, "master seed override");
    sub->add_option("--reps", reps_override, "replication count override");
    sub->add_option("--workers", workers_override, "worker thread count override");
  };

  auto* measures = app.add_subcommand("measures", "performance-measure grid");
  auto* theory = app.add_subcommand("theory", "MSE leading-term grid");
  auto* empirical = app.add_subcommand("empirical", "empirical GMSE grid");
  auto* lemmas = app.add_subcommand("lemmas", "inverse-moment lemma sweep");
  auto* bound = app.add_subcommand("bound", "convergence-rate bound grid");
  auto* selftest = app.add_subcommand("selftest", "run the invariant suite");
  add_common(measures, true);
  add_common(theory, true);
  add_common(empirical, true);
  add_common(lemmas, false);
  add_common(bound, true);
  add_common(selftest, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) return run_selftest();

    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = parse_config_file(config_path);
    } else {
      cfg.spec = ModelSpec::config_equal(FeatureKind::BinaryBernoulliHalf);
      cfg.config_name = "I";
    }
    if (seed_override) cfg.master_seed = *seed_override;
    if (reps_override) cfg.reps = *reps_override;
    if (!out_path.empty()) cfg.csv_path = out_path;
    cfg.validate();

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!cfg.csv_path.empty()) {
      file.open(cfg.csv_path);
      if (!file) throw std::runtime_error("cannot open output file " + cfg.csv_path);
      out = &file;
    }

    if (lemmas->parsed()) {
      write_lemmas_csv(*out, cfg.precision);
      return 0;
    }

    if (cfg.gammas.empty() || cfg.depths.empty())
      throw ConfigError("config: [grid] must provide gamma and depth lists");

    const int workers = resolve_workers(cfg, workers_override);
    std::function<std::vector<CsvRow>(double, int, std::uint64_t)> compute;
    if (measures->parsed())
      compute = [&](double g, int l, std::uint64_t s) { return measures_rows(cfg, g, l, s); };
    else if (theory->parsed())
      compute = [&](double g, int l, std::uint64_t s) { return theory_rows(cfg, g, l, s); };
    else if (empirical->parsed())
      compute = [&](double g, int l, std::uint64_t s) { return empirical_rows(cfg, g, l, s); };
    else
      compute = [&](double g, int l, std::uint64_t s) { return bound_rows(cfg, g, l, s); };

    write_grid_csv(*out, cfg, run_grid(cfg, workers, compute));
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
