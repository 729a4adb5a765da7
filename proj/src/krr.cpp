#include "catekrr/krr.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace catekrr {

namespace {

// Solves (G + ridge I) alpha = y with jitter escalation. The residual check
// is always against the unjittered system, so jitter can only be accepted
// when it perturbs the solution negligibly.
Vector solve_with_jitter(MatrixRef G, double ridge, VectorRef y) {
  const Index m = G.rows();
  const double ynorm = y.norm();
  const double tol = 1e-6 * ynorm;
  const double base_jitter = 1e-10 * G.trace() / static_cast<double>(m);
  Matrix A(m, m);
  for (int attempt = 0; attempt <= 6; ++attempt) {
    A = G;
    double jitter = 0.0;
    if (attempt > 0) jitter = base_jitter * std::pow(10.0, attempt - 1);
    A.diagonal().array() += ridge + jitter;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) continue;
    Vector alpha = llt.solve(y);
    if (!alpha.allFinite()) continue;
    const double resid = (G * alpha + ridge * alpha - y).norm();
    if (resid <= tol) return alpha;
  }
  throw std::runtime_error("krr: linear solve failed residual check after jitter escalation");
}

}  // namespace

FittedKrr fit_masked(const KernelSpec& spec, MatrixRef X, VectorRef y, const BoolArray& mask,
                     double lambda) {
  if (!(std::isfinite(lambda) && lambda > 0.0))
    throw std::invalid_argument("krr: lambda must be positive and finite");
  if (X.rows() != y.size() || X.rows() != mask.size())
    throw std::invalid_argument("krr: X, y and mask sizes disagree");
  if (!y.allFinite()) throw std::invalid_argument("krr: non-finite responses");
  validate(spec, X.cols());
  if (!is_resolved(spec)) throw std::invalid_argument("krr: length scale unresolved");

  const Index n = X.rows();
  const Index m = mask.count();
  if (m == 0) throw std::invalid_argument("krr: mask selects no rows");

  Matrix Xs(m, X.cols());
  Vector ys(m);
  Index r = 0;
  for (Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    Xs.row(r) = X.row(i);
    ys[r] = y[i];
    ++r;
  }

  const Matrix G = gram_matrix(spec, Xs);
  const double ridge = static_cast<double>(n) * lambda;

  FittedKrr model;
  model.spec = spec;
  model.train_points = std::move(Xs);
  model.dual_coeffs = solve_with_jitter(G, ridge, ys);
  model.ridge = ridge;
  model.n_total = n;
  return model;
}

FittedKrr fit(const KernelSpec& spec, MatrixRef X, VectorRef y, double lambda) {
  BoolArray mask = BoolArray::Constant(X.rows(), true);
  return fit_masked(spec, X, y, mask, lambda);
}

FittedKrr fit_from_gram(const KernelSpec& spec, MatrixRef train_points, MatrixRef gram,
                        VectorRef y, Index n_total, double lambda) {
  if (!(std::isfinite(lambda) && lambda > 0.0))
    throw std::invalid_argument("krr: lambda must be positive and finite");
  if (gram.rows() != gram.cols() || gram.rows() != train_points.rows() ||
      gram.rows() != y.size())
    throw std::invalid_argument("krr: gram, train points and response sizes disagree");
  if (n_total < train_points.rows())
    throw std::invalid_argument("krr: n_total smaller than the training subset");
  if (!y.allFinite()) throw std::invalid_argument("krr: non-finite responses");

  FittedKrr model;
  model.spec = spec;
  model.train_points = train_points;
  model.ridge = static_cast<double>(n_total) * lambda;
  model.dual_coeffs = solve_with_jitter(gram, model.ridge, y);
  model.n_total = n_total;
  return model;
}

Vector predict(const FittedKrr& model, MatrixRef Xq) {
  if (Xq.cols() != model.train_points.cols())
    throw std::invalid_argument("krr: query dimension differs from training dimension");
  return cross_gram(model.spec, Xq, model.train_points) * model.dual_coeffs;
}

}  // namespace catekrr
