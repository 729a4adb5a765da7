#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "catekrr/baselines.hpp"
#include "catekrr/dgp.hpp"
#include "catekrr/selection.hpp"

namespace catekrr {

enum class Method { Ours, PlugIn, DrLearner };

std::string method_name(Method method);

struct SelectionSettings {
  std::vector<CandidateConfig> candidates;
  double truncation = 0.0;
  // Regularizers default to 0.01 / (rows of the split they act on).
  std::optional<double> bar_lambda;
  std::optional<double> tilde_lambda;
};

struct BaselineSettings {
  std::vector<double> cv_grid;  // empty: dyadic grid of 10 on the full sample size
  int cv_folds = 3;
  std::optional<KernelSpec> dr_stage2;  // required when DrLearner runs
};

struct ExperimentSettings {
  Scenario scenario = Scenario::Univariate;
  Index n = 0;
  double sigma = 1.0;
  std::vector<Method> methods;
  int reps = 1;
  std::uint64_t master_seed = 0;
  KernelSpec nuisance;
  SelectionSettings selection;
  BaselineSettings baselines;
  Index test_points = 3000;
  int threads = 0;  // <= 0: one worker per hardware thread
};

struct RepRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double mse = 0.0;
  std::string selected_label;  // Ours only
  std::string error;
};

struct MethodReport {
  Method method = Method::Ours;
  std::vector<RepRecord> reps;
  double mean_mse = 0.0;
  double se_mean = 0.0;
  int failures = 0;
  double runtime_sec = 0.0;
};

struct ExperimentReport {
  Scenario scenario = Scenario::Univariate;
  Index n = 0;
  double sigma = 1.0;
  std::uint64_t master_seed = 0;
  std::vector<MethodReport> methods;
};

// Runs every method on `reps` paired replications (replication r uses seed
// master_seed + r for data, test grid and every method), evaluating each fit
// as mean squared error against the true effect on a fresh covariate sample.
// Failing replications are excluded from the mean and counted; more than 10%
// failures for any method fails the whole run.
ExperimentReport run_experiment(const ExperimentSettings& settings);

// Regularizer rule lambda(n) = coef * n^exponent, applied to the two-stage
// estimator without model selection, or a flat zero predictor when `flat` is
// set (a scale reference for the sweep).
struct RateMethodSettings {
  bool flat = false;
  KernelSpec nuisance;
  KernelSpec stage2;
  double lambda_coef = 1.0;
  double lambda_exponent = -0.8;
  std::optional<double> bar_lambda;
};

struct RatePoint {
  Index n = 0;
  double mean_mse = 0.0;
  double se_mean = 0.0;
  int failures = 0;
};

struct RateSweepResult {
  std::vector<RatePoint> points;
  double slope = 0.0;  // least-squares slope of log mean MSE on log n
};

// Requires at least three strictly increasing sample sizes; each (n, rep)
// pair has its own derived seed so adding sizes does not disturb others.
RateSweepResult rate_sweep(Scenario scenario, double sigma, const RateMethodSettings& method,
                           const std::vector<Index>& n_list, int reps,
                           std::uint64_t master_seed, Index test_points, int threads);

// Trace of G/n (G + n lambda)^{-1} in eigenvalue form: sum_j mu_j/(mu_j +
// lambda) over the spectrum of G/n, negative eigenvalues clamped to zero.
double effective_dimension(MatrixRef gram, double lambda);

// Pointwise mean of per-rotation predictions. All vectors must share a size.
Vector average_predictions(const std::vector<Vector>& predictions);

struct CrossFitSettings {
  KernelSpec nuisance;
  SelectionSettings selection;
};

struct CrossFitResult {
  std::vector<int> rotation;  // which rotation each entry of `selections` came from
  std::vector<SelectionResult> selections;
  std::vector<std::string> rotation_errors;  // size 3, empty string where ok
  double truncation = 0.0;
};

// Three-fold cross-fitting: one seeded partition into folds F0..F2, rotation
// j trains candidates on F_j, proxy nuisances on F_{j+1}, validates on
// F_{j+2}. Rotations that fail are skipped (at least one must survive);
// prediction averages the truncated selected candidates of the survivors.
CrossFitResult cross_fit_average(const Dataset& data, const CrossFitSettings& settings,
                                 std::uint64_t seed);

Vector predict(const CrossFitResult& result, MatrixRef Xq);

}  // namespace catekrr
