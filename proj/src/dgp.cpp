#include "catekrr/dgp.hpp"

#include <cmath>
#include <stdexcept>

#include "catekrr/random.hpp"

namespace catekrr {

namespace {

constexpr Index kDenseDim = 10;
constexpr Index kSparseActive = 4;

void draw_covariates(Scenario scenario, std::mt19937_64& engine, Eigen::Ref<Matrix> X,
                     Index row) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (scenario == Scenario::Univariate) {
    X(row, 0) = unit(engine);
    return;
  }
  for (Index j = 0; j < kDenseDim; ++j) X(row, j) = 2.0 * unit(engine) - 1.0;
}

}  // namespace

Index scenario_dim(Scenario scenario) {
  return scenario == Scenario::Univariate ? 1 : kDenseDim;
}

std::string scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::Univariate: return "univariate";
    case Scenario::MultiDense: return "multi_dense";
    case Scenario::MultiSparse: return "multi_sparse";
  }
  throw std::invalid_argument("scenario_name: unknown scenario");
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "univariate") return Scenario::Univariate;
  if (name == "multi_dense") return Scenario::MultiDense;
  if (name == "multi_sparse") return Scenario::MultiSparse;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

double baseline_mean(Scenario scenario, VectorRef x) {
  if (scenario == Scenario::Univariate)
    return 5.0 * (std::abs(x[0] - 0.4) + std::abs(x[0] - 0.8));
  double s = 0.0;
  for (Index j = 0; j < x.size(); ++j) s += std::sin(x[j]);
  return 2.0 / static_cast<double>(kDenseDim) * s;
}

double true_cate(Scenario scenario, VectorRef x) {
  switch (scenario) {
    case Scenario::Univariate:
      return x[0] * x[0];
    case Scenario::MultiDense: {
      double s = 0.0;
      for (Index j = 0; j < x.size(); ++j) s += x[j];
      return 0.5 / static_cast<double>(kDenseDim) * s;
    }
    case Scenario::MultiSparse: {
      double s = 0.0;
      for (Index j = 0; j < kSparseActive; ++j) s += x[j] * x[j];
      return 0.3 / static_cast<double>(kSparseActive) * s;
    }
  }
  throw std::invalid_argument("true_cate: unknown scenario");
}

double propensity(VectorRef x) {
  const double v = std::sin(5.0 * x.norm());
  return std::min(0.9, std::max(0.1, v));
}

Dataset generate(const ScenarioSpec& spec) {
  if (spec.n < 10) throw std::invalid_argument("generate: need n >= 10");
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma))
    throw std::invalid_argument("generate: sigma must be non-negative and finite");
  const Index d = scenario_dim(spec.scenario);
  Dataset data;
  data.X.resize(spec.n, d);
  data.A.resize(spec.n);
  data.Y.resize(spec.n);

  std::mt19937_64 engine = make_engine(spec.seed, streams::data);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < spec.n; ++i) {
    draw_covariates(spec.scenario, engine, data.X, i);
    const double pi = propensity(data.X.row(i).transpose());
    const int a = unit(engine) < pi ? 1 : 0;
    const double eps = gauss(engine);
    data.A[i] = a;
    const double mean = baseline_mean(spec.scenario, data.X.row(i).transpose()) +
                        (a == 1 ? true_cate(spec.scenario, data.X.row(i).transpose()) : 0.0);
    data.Y[i] = mean + spec.sigma * eps;
  }
  return data;
}

Matrix test_grid(Scenario scenario, Index points, std::uint64_t seed) {
  if (points < 1) throw std::invalid_argument("test_grid: need at least one point");
  Matrix X(points, scenario_dim(scenario));
  std::mt19937_64 engine = make_engine(seed, streams::test_grid);
  for (Index i = 0; i < points; ++i) draw_covariates(scenario, engine, X, i);
  return X;
}

Vector true_cate_values(Scenario scenario, MatrixRef X) {
  Vector h(X.rows());
  for (Index i = 0; i < X.rows(); ++i) h[i] = true_cate(scenario, X.row(i).transpose());
  return h;
}

}  // namespace catekrr
