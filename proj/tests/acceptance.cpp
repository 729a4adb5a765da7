// Acceptance gate: nine numbered criteria, one PASS/FAIL line each.
// Exit status is 0 only when every requested criterion passes. Optional
// arguments select a subset by number, e.g. `acceptance 6 7 8`.
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "catekrr/config.hpp"
#include "catekrr/harness.hpp"
#include "catekrr/random.hpp"

using namespace catekrr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

CandidateTemplate dyadic_template(std::string label, KernelSpec kernel) {
  CandidateTemplate t;
  t.label = std::move(label);
  t.kernel = std::move(kernel);
  t.dyadic = true;
  return t;
}

// Univariate runs select over the regularizer only: one smooth second-stage
// kernel crossed with the dyadic grid.
std::vector<CandidateConfig> univariate_candidates(Index n) {
  return expand_candidates({dyadic_template("sob2", sobolev_kernel(2))}, n);
}

// Multivariate dictionary: full-coordinate and first-four-coordinate kernels,
// length scales resolved by the median heuristic on the training split.
std::vector<CandidateConfig> multivariate_candidates(Index n) {
  const std::vector<Index> sub = {0, 1, 2, 3};
  return expand_candidates(
      {
          dyadic_template("m15", matern_kernel(1.5)),
          dyadic_template("m25", matern_kernel(2.5)),
          dyadic_template("m15sub4", matern_kernel(1.5, std::nullopt, sub)),
          dyadic_template("m25sub4", matern_kernel(2.5, std::nullopt, sub)),
          dyadic_template("rbf", rbf_kernel()),
          dyadic_template("rbfsub4", rbf_kernel(std::nullopt, sub)),
      },
      n);
}

double method_mean(const ExperimentReport& report, Method method) {
  for (const MethodReport& m : report.methods)
    if (m.method == method) return m.mean_mse;
  throw std::logic_error("method missing from report");
}

// --- 1. univariate benchmark ------------------------------------------------

Outcome criterion1() {
  ExperimentSettings s;
  s.scenario = Scenario::Univariate;
  s.n = 1000;
  s.sigma = 1.0;
  s.methods = {Method::Ours, Method::PlugIn};
  s.reps = 20;
  s.master_seed = 2024;
  s.nuisance = sobolev_kernel(1);
  s.selection.candidates = univariate_candidates(s.n);
  s.selection.truncation = 4.0;
  s.test_points = 3000;
  const ExperimentReport report = run_experiment(s);
  const double ours = method_mean(report, Method::Ours);
  const double plugin = method_mean(report, Method::PlugIn);
  Outcome out;
  out.pass = ours >= 0.035 && ours <= 0.085 && ours < plugin;
  out.detail = fmt("ours %.4f (band [0.035, 0.085]), plugin %.4f", ours, plugin);
  return out;
}

// --- 2. dense multivariate benchmark ----------------------------------------

Outcome criterion2() {
  ExperimentSettings s;
  s.scenario = Scenario::MultiDense;
  s.n = 1000;
  s.sigma = 1.0;
  s.methods = {Method::Ours, Method::PlugIn};
  s.reps = 20;
  s.master_seed = 2025;
  s.nuisance = matern_kernel(1.5);
  s.selection.candidates = multivariate_candidates(s.n);
  s.selection.truncation = 4.0;
  s.test_points = 3000;
  const ExperimentReport report = run_experiment(s);
  const double ours = method_mean(report, Method::Ours);
  const double plugin = method_mean(report, Method::PlugIn);
  Outcome out;
  out.pass = ours >= 0.008 && ours <= 0.025 && ours < plugin;
  out.detail = fmt("ours %.4f (band [0.008, 0.025]), plugin %.4f", ours, plugin);
  return out;
}

// --- 3. sparse multivariate benchmark + adaptivity --------------------------

bool uses_first_four(const std::string& label) {
  const std::string prefix = label.substr(0, label.find('@'));
  return prefix == "m15sub4" || prefix == "m25sub4" || prefix == "rbfsub4";
}

Outcome criterion3() {
  int subset_picks = 0, ours_reps = 0;
  std::string detail;
  bool beats = true;
  for (Index n : {Index{1000}, Index{2000}}) {
    ExperimentSettings s;
    s.scenario = Scenario::MultiSparse;
    s.n = n;
    s.sigma = 1.0;
    s.methods = {Method::Ours, Method::PlugIn};
    s.reps = 20;
    s.master_seed = 2026;
    s.nuisance = matern_kernel(1.5);
    s.selection.candidates = multivariate_candidates(n);
    s.selection.truncation = 4.0;
    s.test_points = 3000;
    const ExperimentReport report = run_experiment(s);
    const double ours = method_mean(report, Method::Ours);
    const double plugin = method_mean(report, Method::PlugIn);
    beats = beats && ours < plugin;
    int picks = 0, reps = 0;
    for (const MethodReport& m : report.methods) {
      if (m.method != Method::Ours) continue;
      for (const RepRecord& r : m.reps) {
        if (!r.ok) continue;
        ++reps;
        if (uses_first_four(r.selected_label)) ++picks;
      }
    }
    subset_picks += picks;
    ours_reps += reps;
    detail += fmt("n=%lld ours %.4f plugin %.4f subset %d/%d; ",
                  static_cast<long long>(n), ours, plugin, picks, reps);
  }
  const double frac = ours_reps > 0 ? static_cast<double>(subset_picks) / ours_reps : 0.0;
  Outcome out;
  out.pass = beats && frac >= 0.6;
  out.detail = detail + fmt("subset fraction %.2f (need >= 0.60)", frac);
  return out;
}

// --- 4. convergence slope ----------------------------------------------------

Outcome criterion4() {
  RateMethodSettings method;
  method.nuisance = sobolev_kernel(1);
  method.stage2 = sobolev_kernel(2);
  method.lambda_coef = 1.0;
  method.lambda_exponent = -0.8;
  const RateSweepResult res =
      rate_sweep(Scenario::Univariate, 1.0, method, {250, 500, 1000, 2000}, 30, 7, 3000, 0);
  Outcome out;
  out.pass = res.slope >= -1.1 && res.slope <= -0.5;
  std::string points;
  for (const RatePoint& pt : res.points)
    points += fmt("%lld:%.4f ", static_cast<long long>(pt.n), pt.mean_mse);
  out.detail = fmt("slope %.3f (band [-1.1, -0.5]) vs theoretical -0.8; mse %s", res.slope,
                   points.c_str());
  return out;
}

// --- 5. oracle inequality -----------------------------------------------------

Outcome criterion5() {
  const int seeds = 20;
  const double B = 4.0;
  double sum_selected = 0.0, sum_best = 0.0;
  for (int r = 0; r < seeds; ++r) {
    const std::uint64_t seed = 505 + static_cast<std::uint64_t>(r);
    const Dataset data = generate({Scenario::Univariate, 1000, 1.0, seed});
    const std::array<Dataset, 3> parts = split_three(data, seed);
    const std::vector<CandidateConfig> candidates = univariate_candidates(data.n());
    const SelectionResult sel =
        select(candidates, parts[0], parts[1], parts[2], sobolev_kernel(1),
               default_bar_lambda(parts[0].n()), default_bar_lambda(parts[1].n()), B);
    const Matrix grid = test_grid(Scenario::Univariate, 3000, seed);
    const Vector truth = true_cate_values(Scenario::Univariate, grid);
    double best = std::numeric_limits<double>::infinity();
    double selected = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!sel.fitted[i]) continue;
      const Vector pred = truncate(predict_cate(*sel.fitted[i], grid), B);
      const double mse = (pred - truth).squaredNorm() / static_cast<double>(truth.size());
      best = std::min(best, mse);
      if (i == sel.chosen) selected = mse;
    }
    if (!std::isfinite(selected)) throw std::runtime_error("selected candidate missing");
    sum_selected += selected;
    sum_best += best;
  }
  const double mean_selected = sum_selected / seeds;
  const double mean_best = sum_best / seeds;
  Outcome out;
  out.pass = mean_selected <= 1.25 * mean_best + 0.01;
  out.detail = fmt("selected %.5f vs bound 1.25 * best %.5f + 0.01 = %.5f", mean_selected,
                   mean_best, 1.25 * mean_best + 0.01);
  return out;
}

// --- 6. solver equals the dense-inverse oracle --------------------------------

Outcome criterion6() {
  std::mt19937_64 engine = make_engine(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int p = 0; p < 50; ++p) {
    const Index n = 5 + static_cast<Index>(unit(engine) * 45);  // 5..50
    const Index d = 1 + static_cast<Index>(unit(engine) * 3);   // 1..3
    KernelSpec spec;
    switch (p % 4) {
      case 0: spec = sobolev_kernel(1 + p % 2); break;
      case 1: spec = matern_kernel(1.5, 0.3 + unit(engine)); break;
      case 2: spec = matern_kernel(2.5, 0.3 + unit(engine)); break;
      default: spec = rbf_kernel(0.3 + unit(engine)); break;
    }
    Matrix X(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) X(i, j) = unit(engine);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = gauss(engine);
    const double lambda = std::pow(10.0, -4.0 + 4.0 * unit(engine));

    const FittedKrr fit_result = fit(spec, X, y, lambda);
    const Matrix G = gram_matrix(spec, X);
    const Matrix A = G + static_cast<double>(n) * lambda * Matrix::Identity(n, n);
    const Vector alpha = A.inverse() * y;
    const double coeff_err = (fit_result.dual_coeffs - alpha).norm() / alpha.norm();

    Matrix Q(20, d);
    for (Index i = 0; i < Q.rows(); ++i)
      for (Index j = 0; j < d; ++j) Q(i, j) = unit(engine);
    const Vector pred = predict(fit_result, Q);
    const Vector oracle_pred = cross_gram(spec, Q, X) * alpha;
    const double pred_err = (pred - oracle_pred).norm() / std::max(oracle_pred.norm(), 1e-12);
    worst = std::max(worst, std::max(coeff_err, pred_err));
  }
  Outcome out;
  out.pass = worst <= 1e-8;
  out.detail = fmt("worst relative error %.3g over 50 problems (tolerance 1e-8)", worst);
  return out;
}

// --- 7. imputation and DR identities ------------------------------------------

Outcome criterion7() {
  // Exact identities at the true nuisances, noiseless outcomes.
  const Index n = 200;
  std::mt19937_64 engine = make_engine(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(n), f0(n), f1(n), h(n), y(n), e(n);
  IntArray A(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = unit(engine);
    Vector xi(1);
    xi << x[i];
    f0[i] = baseline_mean(Scenario::Univariate, xi);
    h[i] = true_cate(Scenario::Univariate, xi);
    f1[i] = f0[i] + h[i];
    e[i] = propensity(xi);
    A[i] = unit(engine) < e[i] ? 1 : 0;
    y[i] = f0[i] + (A[i] == 1 ? h[i] : 0.0);
  }
  const double impute_err = (impute_from_predictions(A, y, f0, f1) - h).cwiseAbs().maxCoeff();
  const double dr_err = (dr_pseudo_outcomes(A, y, f0, f1, e) - h).cwiseAbs().maxCoeff();
  const bool exact_ok = impute_err <= 1e-12 && dr_err <= 1e-12;

  // Monte-Carlo conditional means at a fixed covariate, sigma = 1.
  const int draws = 100000;
  Vector x0(1);
  x0 << 0.3;
  const double f0v = baseline_mean(Scenario::Univariate, x0);
  const double hv = true_cate(Scenario::Univariate, x0);
  const double f1v = f0v + hv;
  const double pi0 = propensity(x0);
  const double e_fixed = 0.5;  // any fixed valid propensity keeps the DR mean
  std::normal_distribution<double> gauss(0.0, 1.0);
  double sum_m = 0.0, ss_m = 0.0, sum_psi = 0.0, ss_psi = 0.0;
  for (int i = 0; i < draws; ++i) {
    const int a = unit(engine) < pi0 ? 1 : 0;
    const double yv = f0v + a * hv + gauss(engine);
    const double m = a == 1 ? yv - f0v : f1v - yv;
    const double psi =
        f1v - f0v + a * (yv - f1v) / e_fixed - (1 - a) * (yv - f0v) / (1.0 - e_fixed);
    sum_m += m;
    ss_m += m * m;
    sum_psi += psi;
    ss_psi += psi * psi;
  }
  auto mc_check = [&](double sum, double ss, double target, double& z) {
    const double mean = sum / draws;
    const double var = (ss - sum * sum / draws) / (draws - 1);
    const double se = std::sqrt(var / draws);
    z = std::abs(mean - target) / se;
    return z <= 3.0;
  };
  double z_m = 0.0, z_psi = 0.0;
  const bool mc_ok = mc_check(sum_m, ss_m, hv, z_m) && mc_check(sum_psi, ss_psi, hv, z_psi);

  Outcome out;
  out.pass = exact_ok && mc_ok;
  out.detail = fmt("exact max err %.2g / %.2g (tol 1e-12); MC |z| %.2f / %.2f (limit 3)",
                   impute_err, dr_err, z_m, z_psi);
  return out;
}

// --- 8. kernel property suite --------------------------------------------------

Outcome criterion8() {
  std::mt19937_64 engine = make_engine(404);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_sym = 0.0, worst_eig_ratio = 0.0;
  for (int p = 0; p < 100; ++p) {
    const Index n = 2 + static_cast<Index>(unit(engine) * 198);  // 2..200
    const Index d = 1 + static_cast<Index>(unit(engine) * 4);    // 1..4
    KernelSpec spec;
    switch (p % 5) {
      case 0: spec = sobolev_kernel(1); break;
      case 1: spec = sobolev_kernel(2); break;
      case 2: spec = matern_kernel(1.5, 0.2 + unit(engine)); break;
      case 3: spec = matern_kernel(2.5, 0.2 + unit(engine)); break;
      default: spec = rbf_kernel(0.2 + unit(engine)); break;
    }
    Matrix X(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) X(i, j) = unit(engine);
    const Matrix G = gram_matrix(spec, X);
    worst_sym = std::max(worst_sym, (G - G.transpose()).cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
    const double floor = -1e-8 * G.trace() / static_cast<double>(n);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < floor)
      worst_eig_ratio = std::max(
          worst_eig_ratio, (floor - min_eig) / std::max(G.trace() / static_cast<double>(n), 1e-300));
  }

  // Median-heuristic contract for every length-scale family.
  double worst_median = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    Matrix X(60, 2);
    for (Index i = 0; i < X.rows(); ++i)
      for (Index j = 0; j < 2; ++j) X(i, j) = unit(engine);
    const double r_med = median_pairwise_distance(X, {});
    for (const KernelSpec& spec : {matern_kernel(1.5), matern_kernel(2.5), rbf_kernel()}) {
      const KernelSpec resolved = resolve_length_scale(spec, X);
      Vector lhs = Vector::Zero(2), rhs = Vector::Zero(2);
      rhs[0] = r_med;
      worst_median = std::max(worst_median, std::abs(kernel_eval(resolved, lhs, rhs) - 0.5));
    }
  }

  Outcome out;
  out.pass = worst_sym == 0.0 && worst_eig_ratio == 0.0 && worst_median <= 1e-8;
  out.detail = fmt("symmetry max %.1g (exact), eigen floor breaches %.1g, median gap %.2g",
                   worst_sym, worst_eig_ratio, worst_median);
  return out;
}

// --- 9. CLI determinism ----------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_command(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
}

Outcome criterion9() {
  const char* cli = std::getenv("CATEKRR_CLI");
  Outcome out;
  if (cli == nullptr) {
    out.detail = "CATEKRR_CLI is not set; run through ctest";
    return out;
  }
  const fs::path dir =
      fs::temp_directory_path() /
      ("catekrr_accept_" + std::to_string(static_cast<unsigned long>(::getpid())));
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    return (dir / name).string();
  };
  auto run_twice = [&](const std::string& tag, const std::string& args,
                       const std::vector<std::string>& files) {
    const fs::path out1 = dir / (tag + "_1");
    const fs::path out2 = dir / (tag + "_2");
    const std::string quiet = " > /dev/null 2>&1";
    if (run_command(std::string("\"") + cli + "\" " + args + " --out " + out1.string() + quiet) !=
        0)
      return false;
    if (run_command(std::string("\"") + cli + "\" " + args + " --out " + out2.string() + quiet) !=
        0)
      return false;
    for (const std::string& f : files) {
      const std::string a = read_file(out1 / f);
      if (a.empty() || a != read_file(out2 / f)) return false;
    }
    return true;
  };

  const std::string sim_cfg = write("sim.json", R"({
    "scenario": {"name": "univariate", "n": 80, "sigma": 0.5},
    "kernels": {
      "nuisance": {"family": "sobolev_bernoulli", "order_or_nu": 1},
      "dr_stage2": {"family": "sobolev_bernoulli", "order_or_nu": 2}
    },
    "candidates": [
      {"label": "sob2",
       "kernel": {"family": "sobolev_bernoulli", "order_or_nu": 2},
       "lambda_grid": [0.02, 0.1]}
    ],
    "selection": {"truncation": 4.0},
    "methods": ["ours", "plugin", "dr"],
    "execution": {"reps": 3, "seed": 5, "threads": 1, "test_points": 300}
  })");
  const std::string rates_cfg = write("rates.json", R"({
    "scenario": {"name": "univariate", "sigma": 0.5},
    "kernels": {
      "nuisance": {"family": "sobolev_bernoulli", "order_or_nu": 1},
      "stage2": {"family": "sobolev_bernoulli", "order_or_nu": 2}
    },
    "execution": {"n_list": [40, 80, 160], "reps": 2, "seed": 11, "threads": 1,
                  "test_points": 200}
  })");
  const std::string fit_cfg = write("fit.json", R"({
    "data": {"covariates": ["x"], "treatment": "a", "outcome": "y"},
    "kernels": {"nuisance": {"family": "sobolev_bernoulli", "order_or_nu": 1}},
    "candidates": [
      {"label": "sob2",
       "kernel": {"family": "sobolev_bernoulli", "order_or_nu": 2},
       "lambda_grid": [0.02, 0.1]}
    ],
    "execution": {"seed": 3, "threads": 1}
  })");
  std::string csv = "x,a,y\n";
  {
    const Dataset data = generate({Scenario::Univariate, 60, 0.3, 31});
    char buf[96];
    for (Index i = 0; i < data.n(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.10g,%d,%.10g\n", data.X(i, 0), data.A[i], data.Y[i]);
      csv += buf;
    }
  }
  const std::string csv_path = write("data.csv", csv);

  const bool sim_ok = run_twice("sim", "simulate --config " + sim_cfg, {"report.csv"});
  const bool rates_ok = run_twice("rates", "rates --config " + rates_cfg, {"rates.csv"});
  const bool fit_ok = run_twice("fit", "fit --config " + fit_cfg + " --data " + csv_path,
                                {"predictions.csv", "selected.csv", "proxy_risks.csv"});
  std::error_code ec;
  fs::remove_all(dir, ec);

  out.pass = sim_ok && rates_ok && fit_ok;
  out.detail = fmt("byte-identical reruns: simulate %s, rates %s, fit %s",
                   sim_ok ? "yes" : "NO", rates_ok ? "yes" : "NO", fit_ok ? "yes" : "NO");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    const auto started = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = fmt("exception: %s", e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("criterion %d: %s  %s  [%.1fs]\n", id, outcome.pass ? "PASS" : "FAIL",
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
