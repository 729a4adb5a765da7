#include "catekrr/harness.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "catekrr/random.hpp"

namespace catekrr {

namespace {

void parallel_for(Index count, int threads, const std::function<void(Index)>& body) {
  int t = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  if (static_cast<Index>(t) > count) t = static_cast<int>(count);
  if (t <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(t));
  for (int w = 0; w < t; ++w) {
    workers.emplace_back([&] {
      try {
        for (;;) {
          const Index i = next.fetch_add(1);
          if (i >= count) return;
          body(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

double mse_against(VectorRef pred, VectorRef truth) {
  return (pred - truth).squaredNorm() / static_cast<double>(truth.size());
}

void summarize(MethodReport& report, int reps) {
  double sum = 0.0;
  int k = 0;
  for (const RepRecord& r : report.reps) {
    if (!r.ok) continue;
    sum += r.mse;
    ++k;
  }
  report.failures = static_cast<int>(report.reps.size()) - k;
  report.mean_mse = k > 0 ? sum / k : std::numeric_limits<double>::quiet_NaN();
  double ss = 0.0;
  for (const RepRecord& r : report.reps) {
    if (!r.ok) continue;
    const double d = r.mse - report.mean_mse;
    ss += d * d;
  }
  report.se_mean = k > 1 ? std::sqrt(ss / (k - 1) / k) : 0.0;
  if (report.failures * 10 > reps)
    throw std::runtime_error("harness: method '" + method_name(report.method) + "' failed " +
                             std::to_string(report.failures) + " of " + std::to_string(reps) +
                             " replications");
}

// Seeded three-way partition shared by split_three and the cross-fitting
// rotations: sizes ceil(n/3), floor(n/3), remainder.
std::array<std::vector<Index>, 3> three_fold_indices(Index n, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 engine = make_engine(seed, streams::split);
  std::shuffle(perm.begin(), perm.end(), engine);
  const Index n1 = (n + 2) / 3;
  const Index n2 = n / 3;
  std::array<std::vector<Index>, 3> folds;
  folds[0].assign(perm.begin(), perm.begin() + n1);
  folds[1].assign(perm.begin() + n1, perm.begin() + n1 + n2);
  folds[2].assign(perm.begin() + n1 + n2, perm.end());
  return folds;
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::Ours: return "ours";
    case Method::PlugIn: return "plugin";
    case Method::DrLearner: return "dr";
  }
  throw std::invalid_argument("method_name: unknown method");
}

ExperimentReport run_experiment(const ExperimentSettings& settings) {
  if (settings.n < 10) throw std::invalid_argument("harness: need n >= 10");
  if (settings.reps < 1) throw std::invalid_argument("harness: need at least one replication");
  if (settings.methods.empty()) throw std::invalid_argument("harness: no methods requested");
  if (settings.test_points < 1)
    throw std::invalid_argument("harness: need at least one test point");
  bool wants_ours = false, wants_dr = false;
  for (Method m : settings.methods) {
    if (m == Method::Ours) wants_ours = true;
    if (m == Method::DrLearner) wants_dr = true;
  }
  if (wants_ours) {
    if (settings.selection.candidates.empty())
      throw std::invalid_argument("harness: selection requires a candidate list");
    if (!(settings.selection.truncation > 0.0))
      throw std::invalid_argument("harness: selection requires a positive truncation level");
  }
  if (wants_dr && !settings.baselines.dr_stage2)
    throw std::invalid_argument("harness: dr method requires a second-stage kernel");

  const std::vector<double> cv_grid = settings.baselines.cv_grid.empty()
                                          ? dyadic_lambda_grid(settings.n)
                                          : settings.baselines.cv_grid;

  ExperimentReport report;
  report.scenario = settings.scenario;
  report.n = settings.n;
  report.sigma = settings.sigma;
  report.master_seed = settings.master_seed;
  report.methods.resize(settings.methods.size());
  for (std::size_t m = 0; m < settings.methods.size(); ++m) {
    report.methods[m].method = settings.methods[m];
    report.methods[m].reps.resize(static_cast<std::size_t>(settings.reps));
  }
  std::vector<double> runtime(settings.methods.size(), 0.0);
  std::mutex runtime_mutex;

  parallel_for(settings.reps, settings.threads, [&](Index rep) {
    const std::uint64_t seed = settings.master_seed + static_cast<std::uint64_t>(rep);
    ScenarioSpec dspec;
    dspec.scenario = settings.scenario;
    dspec.n = settings.n;
    dspec.sigma = settings.sigma;
    dspec.seed = seed;
    const Dataset data = generate(dspec);
    const Matrix grid = test_grid(settings.scenario, settings.test_points, seed);
    const Vector truth = true_cate_values(settings.scenario, grid);

    for (std::size_t m = 0; m < settings.methods.size(); ++m) {
      RepRecord rec;
      rec.rep = static_cast<int>(rep);
      rec.seed = seed;
      const auto started = std::chrono::steady_clock::now();
      try {
        Vector pred;
        switch (settings.methods[m]) {
          case Method::Ours: {
            const std::array<Dataset, 3> parts = split_three(data, seed);
            const double bar =
                settings.selection.bar_lambda.value_or(default_bar_lambda(parts[0].n()));
            const double tilde =
                settings.selection.tilde_lambda.value_or(default_bar_lambda(parts[1].n()));
            const SelectionResult sel =
                select(settings.selection.candidates, parts[0], parts[1], parts[2],
                       settings.nuisance, bar, tilde, settings.selection.truncation);
            rec.selected_label = sel.candidates[sel.chosen].label;
            pred = predict_selected(sel, grid);
            break;
          }
          case Method::PlugIn: {
            const PluginEstimator est =
                plugin_cate(data, settings.nuisance, cv_grid, settings.baselines.cv_folds,
                            derive_seed(seed, streams::plugin));
            pred = predict(est, grid);
            break;
          }
          case Method::DrLearner: {
            const DrEstimator est = dr_learner(data, settings.nuisance,
                                               *settings.baselines.dr_stage2, cv_grid,
                                               settings.baselines.cv_folds,
                                               derive_seed(seed, streams::dr));
            pred = predict(est, grid);
            break;
          }
        }
        rec.mse = mse_against(pred, truth);
        rec.ok = std::isfinite(rec.mse);
        if (!rec.ok) rec.error = "non-finite mse";
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      {
        std::lock_guard<std::mutex> lock(runtime_mutex);
        runtime[m] += elapsed.count();
      }
      report.methods[m].reps[static_cast<std::size_t>(rep)] = std::move(rec);
    }
  });

  for (std::size_t m = 0; m < settings.methods.size(); ++m) {
    report.methods[m].runtime_sec = runtime[m];
    summarize(report.methods[m], settings.reps);
  }
  return report;
}

RateSweepResult rate_sweep(Scenario scenario, double sigma, const RateMethodSettings& method,
                           const std::vector<Index>& n_list, int reps,
                           std::uint64_t master_seed, Index test_points, int threads) {
  if (n_list.size() < 3)
    throw std::invalid_argument("rate_sweep: need at least three sample sizes");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 10) throw std::invalid_argument("rate_sweep: sample sizes must be >= 10");
    if (i > 0 && n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("rate_sweep: sample sizes must be strictly increasing");
  }
  if (reps < 1) throw std::invalid_argument("rate_sweep: need at least one replication");
  if (!method.flat && !(std::isfinite(method.lambda_coef) && method.lambda_coef > 0.0))
    throw std::invalid_argument("rate_sweep: lambda coefficient must be positive");

  struct Cell {
    bool ok = false;
    double mse = 0.0;
  };
  std::vector<Cell> cells(n_list.size() * static_cast<std::size_t>(reps));

  parallel_for(static_cast<Index>(cells.size()), threads, [&](Index flat_idx) {
    const std::size_t i = static_cast<std::size_t>(flat_idx) / static_cast<std::size_t>(reps);
    const int r = static_cast<int>(static_cast<std::size_t>(flat_idx) %
                                   static_cast<std::size_t>(reps));
    // Replication r shares a base seed across sizes; sizes separate below it.
    const std::uint64_t seed =
        derive_seed(master_seed + static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(i));
    Cell& cell = cells[static_cast<std::size_t>(flat_idx)];
    try {
      const Index n = n_list[i];
      ScenarioSpec dspec;
      dspec.scenario = scenario;
      dspec.n = n;
      dspec.sigma = sigma;
      dspec.seed = seed;
      const Matrix grid = test_grid(scenario, test_points, seed);
      const Vector truth = true_cate_values(scenario, grid);
      if (method.flat) {
        cell.mse = truth.squaredNorm() / static_cast<double>(truth.size());
      } else {
        const Dataset data = generate(dspec);
        const double lambda =
            method.lambda_coef * std::pow(static_cast<double>(n), method.lambda_exponent);
        const double bar = method.bar_lambda.value_or(default_bar_lambda(n));
        const CateEstimator est = fit_cate(data, method.nuisance, method.stage2, bar, lambda);
        cell.mse = mse_against(predict_cate(est, grid), truth);
      }
      cell.ok = std::isfinite(cell.mse);
    } catch (const std::exception&) {
      cell.ok = false;
    }
  });

  RateSweepResult result;
  result.points.resize(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    RatePoint& pt = result.points[i];
    pt.n = n_list[i];
    double sum = 0.0;
    int k = 0;
    for (int r = 0; r < reps; ++r) {
      const Cell& cell = cells[i * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
      if (!cell.ok) continue;
      sum += cell.mse;
      ++k;
    }
    pt.failures = reps - k;
    if (pt.failures * 10 > reps)
      throw std::runtime_error("rate_sweep: " + std::to_string(pt.failures) + " of " +
                               std::to_string(reps) + " replications failed at n = " +
                               std::to_string(pt.n));
    pt.mean_mse = sum / k;
    double ss = 0.0;
    for (int r = 0; r < reps; ++r) {
      const Cell& cell = cells[i * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
      if (!cell.ok) continue;
      const double d = cell.mse - pt.mean_mse;
      ss += d * d;
    }
    pt.se_mean = k > 1 ? std::sqrt(ss / (k - 1) / k) : 0.0;
  }

  // Least-squares slope of log mean MSE on log n.
  const std::size_t p = result.points.size();
  double mx = 0.0, my = 0.0;
  for (const RatePoint& pt : result.points) {
    mx += std::log(static_cast<double>(pt.n));
    my += std::log(pt.mean_mse);
  }
  mx /= static_cast<double>(p);
  my /= static_cast<double>(p);
  double sxx = 0.0, sxy = 0.0;
  for (const RatePoint& pt : result.points) {
    const double dx = std::log(static_cast<double>(pt.n)) - mx;
    sxy += dx * (std::log(pt.mean_mse) - my);
    sxx += dx * dx;
  }
  result.slope = sxy / sxx;
  return result;
}

double effective_dimension(MatrixRef gram, double lambda) {
  if (gram.rows() != gram.cols())
    throw std::invalid_argument("effective_dimension: matrix must be square");
  if (!(std::isfinite(lambda) && lambda > 0.0))
    throw std::invalid_argument("effective_dimension: lambda must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram / static_cast<double>(gram.rows()),
                                               Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("effective_dimension: eigendecomposition failed");
  double s = 0.0;
  for (Index j = 0; j < solver.eigenvalues().size(); ++j) {
    const double mu = std::max(0.0, solver.eigenvalues()[j]);
    s += mu / (mu + lambda);
  }
  return s;
}

Vector average_predictions(const std::vector<Vector>& predictions) {
  if (predictions.empty())
    throw std::invalid_argument("average_predictions: nothing to average");
  Vector mean = predictions[0];
  for (std::size_t i = 1; i < predictions.size(); ++i) {
    if (predictions[i].size() != mean.size())
      throw std::invalid_argument("average_predictions: prediction sizes disagree");
    mean += predictions[i];
  }
  return mean / static_cast<double>(predictions.size());
}

CrossFitResult cross_fit_average(const Dataset& data, const CrossFitSettings& settings,
                                 std::uint64_t seed) {
  validate(data);
  if (data.n() < 9) throw std::invalid_argument("cross_fit: need at least nine rows");
  if (settings.selection.candidates.empty())
    throw std::invalid_argument("cross_fit: empty candidate list");
  if (!(settings.selection.truncation > 0.0))
    throw std::invalid_argument("cross_fit: truncation level must be positive");

  const std::array<std::vector<Index>, 3> fold_idx = three_fold_indices(data.n(), seed);
  std::array<Dataset, 3> folds;
  for (int j = 0; j < 3; ++j) folds[static_cast<std::size_t>(j)] =
      subset(data, fold_idx[static_cast<std::size_t>(j)]);

  CrossFitResult result;
  result.truncation = settings.selection.truncation;
  result.rotation_errors.assign(3, "");
  for (int j = 0; j < 3; ++j) {
    const Dataset& d1 = folds[static_cast<std::size_t>(j)];
    const Dataset& d2 = folds[static_cast<std::size_t>((j + 1) % 3)];
    const Dataset& d3 = folds[static_cast<std::size_t>((j + 2) % 3)];
    try {
      const double bar = settings.selection.bar_lambda.value_or(default_bar_lambda(d1.n()));
      const double tilde = settings.selection.tilde_lambda.value_or(default_bar_lambda(d2.n()));
      SelectionResult sel = select(settings.selection.candidates, d1, d2, d3, settings.nuisance,
                                   bar, tilde, settings.selection.truncation);
      result.rotation.push_back(j);
      result.selections.push_back(std::move(sel));
    } catch (const std::exception& e) {
      result.rotation_errors[static_cast<std::size_t>(j)] = e.what();
    }
  }
  if (result.selections.empty())
    throw std::runtime_error("cross_fit: every rotation failed");
  return result;
}

Vector predict(const CrossFitResult& result, MatrixRef Xq) {
  std::vector<Vector> preds;
  preds.reserve(result.selections.size());
  for (const SelectionResult& sel : result.selections)
    preds.push_back(predict_selected(sel, Xq));
  return average_predictions(preds);
}

}  // namespace catekrr
