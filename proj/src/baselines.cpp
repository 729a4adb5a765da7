#include "catekrr/baselines.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "catekrr/random.hpp"

namespace catekrr {

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("cv: empty lambda grid");
  for (double v : grid)
    if (!(std::isfinite(v) && v > 0.0))
      throw std::invalid_argument("cv: lambda grid values must be positive and finite");
}

std::vector<std::vector<Index>> make_folds(Index m, int folds, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 engine = make_engine(seed, streams::cv);
  std::shuffle(perm.begin(), perm.end(), engine);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  const Index base = m / folds;
  const Index extra = m % folds;
  Index offset = 0;
  for (int f = 0; f < folds; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    out[static_cast<std::size_t>(f)].assign(perm.begin() + offset, perm.begin() + offset + size);
    offset += size;
  }
  return out;
}

}  // namespace

std::vector<double> dyadic_lambda_grid(Index n, int count) {
  if (n < 1) throw std::invalid_argument("dyadic_lambda_grid: n must be positive");
  if (count < 1) throw std::invalid_argument("dyadic_lambda_grid: count must be positive");
  std::vector<double> grid(static_cast<std::size_t>(count));
  double num = 1.0;
  for (int j = 0; j < count; ++j) {
    grid[static_cast<std::size_t>(j)] = num / static_cast<double>(n);
    num *= 2.0;
  }
  return grid;
}

double kfold_cv_lambda(const KernelSpec& spec, MatrixRef X, VectorRef y, const BoolArray& mask,
                       const std::vector<double>& grid, int folds, std::uint64_t seed) {
  check_grid(grid);
  if (folds < 2) throw std::invalid_argument("cv: need at least two folds");
  if (X.rows() != y.size() || X.rows() != mask.size())
    throw std::invalid_argument("cv: X, y and mask sizes disagree");
  validate(spec, X.cols());
  if (!is_resolved(spec)) throw std::invalid_argument("cv: length scale unresolved");

  const Index m = mask.count();
  if (m < folds) throw std::invalid_argument("cv: fewer masked rows than folds");
  Matrix Xm(m, X.cols());
  Vector ym(m);
  Index r = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    if (!mask[i]) continue;
    Xm.row(r) = X.row(i);
    ym[r] = y[i];
    ++r;
  }

  // One Gram for the whole procedure; folds slice it.
  const Matrix G = gram_matrix(spec, Xm);
  const std::vector<std::vector<Index>> fold_idx = make_folds(m, folds, seed);

  std::vector<double> mse(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    const std::vector<Index>& te = fold_idx[static_cast<std::size_t>(f)];
    std::vector<Index> tr;
    tr.reserve(static_cast<std::size_t>(m) - te.size());
    for (int g = 0; g < folds; ++g)
      if (g != f)
        tr.insert(tr.end(), fold_idx[static_cast<std::size_t>(g)].begin(),
                  fold_idx[static_cast<std::size_t>(g)].end());

    const Index t = static_cast<Index>(tr.size());
    const Index q = static_cast<Index>(te.size());
    Matrix Gtr(t, t);
    Matrix Gte(q, t);
    Vector ytr(t);
    for (Index i = 0; i < t; ++i) {
      ytr[i] = ym[tr[static_cast<std::size_t>(i)]];
      for (Index j = 0; j < t; ++j)
        Gtr(i, j) = G(tr[static_cast<std::size_t>(i)], tr[static_cast<std::size_t>(j)]);
    }
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < t; ++j)
        Gte(i, j) = G(te[static_cast<std::size_t>(i)], tr[static_cast<std::size_t>(j)]);

    for (std::size_t l = 0; l < grid.size(); ++l) {
      Matrix A = Gtr;
      A.diagonal().array() += static_cast<double>(t) * grid[l];
      Eigen::LLT<Matrix> llt(A);
      if (llt.info() != Eigen::Success) {
        mse[l] = std::numeric_limits<double>::infinity();
        continue;
      }
      const Vector alpha = llt.solve(ytr);
      double sse = 0.0;
      const Vector pred = Gte * alpha;
      for (Index i = 0; i < q; ++i) {
        const double e = pred[i] - ym[te[static_cast<std::size_t>(i)]];
        sse += e * e;
      }
      mse[l] += sse / static_cast<double>(m);
    }
  }

  std::size_t best = 0;
  for (std::size_t l = 1; l < grid.size(); ++l) {
    if (mse[l] < mse[best] || (mse[l] == mse[best] && grid[l] > grid[best])) best = l;
  }
  if (!std::isfinite(mse[best]))
    throw std::runtime_error("cv: every fold fit failed on every lambda");
  return grid[best];
}

PluginEstimator plugin_cate(const Dataset& data, const KernelSpec& spec_F,
                            const std::vector<double>& grid, int folds, std::uint64_t seed) {
  validate(data);
  if (!both_arms_present(data))
    throw std::invalid_argument("plugin: both treatment arms required");
  const KernelSpec spec = resolve_length_scale(spec_F, data.X);
  const BoolArray m0 = arm_mask(data, 0);
  const BoolArray m1 = arm_mask(data, 1);
  // Both arms share the cv seed: arms with identical rows get identical folds
  // and therefore identical fits.
  PluginEstimator est;
  est.lambda0 = kfold_cv_lambda(spec, data.X, data.Y, m0, grid, folds, seed);
  est.lambda1 = kfold_cv_lambda(spec, data.X, data.Y, m1, grid, folds, seed);
  est.f0 = fit_masked(spec, data.X, data.Y, m0, est.lambda0);
  est.f1 = fit_masked(spec, data.X, data.Y, m1, est.lambda1);
  return est;
}

Vector predict(const PluginEstimator& est, MatrixRef Xq) {
  return predict(est.f1, Xq) - predict(est.f0, Xq);
}

Vector dr_pseudo_outcomes(const IntArray& A, VectorRef y, VectorRef f0_at_x, VectorRef f1_at_x,
                          VectorRef propensity) {
  const Index n = A.size();
  if (y.size() != n || f0_at_x.size() != n || f1_at_x.size() != n || propensity.size() != n)
    throw std::invalid_argument("dr: pseudo-outcome input sizes disagree");
  Vector psi(n);
  for (Index i = 0; i < n; ++i) {
    const double e = propensity[i];
    if (!(e > 0.0 && e < 1.0))
      throw std::invalid_argument("dr: propensity must lie strictly inside (0,1)");
    if (A[i] != 0 && A[i] != 1)
      throw std::invalid_argument("dr: treatment must be 0 or 1");
    const double base = f1_at_x[i] - f0_at_x[i];
    if (A[i] == 1)
      psi[i] = base + (y[i] - f1_at_x[i]) / e;
    else
      psi[i] = base - (y[i] - f0_at_x[i]) / (1.0 - e);
  }
  return psi;
}

DrEstimator dr_learner(const Dataset& data, const KernelSpec& spec_F,
                       const KernelSpec& stage2_spec, const std::vector<double>& grid,
                       int folds, std::uint64_t seed) {
  validate(data);
  check_grid(grid);
  const Index n = data.n();
  if (n < 4) throw std::invalid_argument("dr: need at least four rows");

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 engine = make_engine(seed, streams::split);
  std::shuffle(perm.begin(), perm.end(), engine);
  const Index n1 = (n + 1) / 2;
  const Dataset h1 = subset(data, {perm.begin(), perm.begin() + n1});
  const Dataset h2 = subset(data, {perm.begin() + n1, perm.end()});
  if (!both_arms_present(h1) || !both_arms_present(h2))
    throw std::runtime_error("dr: a half-sample is missing a treatment arm");

  const KernelSpec spec1 = resolve_length_scale(spec_F, h1.X);
  const std::uint64_t cv_arm = derive_seed(seed, streams::cv);
  const std::uint64_t cv_prop = derive_seed(seed, streams::cv, 1);
  const std::uint64_t cv_stage2 = derive_seed(seed, streams::cv, 2);

  DrEstimator est;
  const BoolArray m0 = arm_mask(h1, 0);
  const BoolArray m1 = arm_mask(h1, 1);
  const double l0 = kfold_cv_lambda(spec1, h1.X, h1.Y, m0, grid, folds, cv_arm);
  const double l1 = kfold_cv_lambda(spec1, h1.X, h1.Y, m1, grid, folds, cv_arm);
  est.f0 = fit_masked(spec1, h1.X, h1.Y, m0, l0);
  est.f1 = fit_masked(spec1, h1.X, h1.Y, m1, l1);

  const Vector a1 = h1.A.cast<double>();
  const BoolArray all1 = BoolArray::Constant(h1.n(), true);
  const double le = kfold_cv_lambda(spec1, h1.X, a1, all1, grid, folds, cv_prop);
  est.propensity_fit = fit_masked(spec1, h1.X, a1, all1, le);

  const Vector e_hat = predict(est.propensity_fit, h2.X).cwiseMax(0.01).cwiseMin(0.99);
  const Vector psi =
      dr_pseudo_outcomes(h2.A, h2.Y, predict(est.f0, h2.X), predict(est.f1, h2.X), e_hat);

  const KernelSpec spec2 = resolve_length_scale(stage2_spec, h2.X);
  const BoolArray all2 = BoolArray::Constant(h2.n(), true);
  est.stage2_lambda = kfold_cv_lambda(spec2, h2.X, psi, all2, grid, folds, cv_stage2);
  est.second_stage = fit_masked(spec2, h2.X, psi, all2, est.stage2_lambda);
  return est;
}

Vector predict(const DrEstimator& est, MatrixRef Xq) { return predict(est.second_stage, Xq); }

}  // namespace catekrr
