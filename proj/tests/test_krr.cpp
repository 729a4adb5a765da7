#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <random>

#include "catekrr/krr.hpp"
#include "catekrr/random.hpp"

using namespace catekrr;

namespace {

Matrix random_matrix(Index n, Index d, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 engine = make_engine(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = u(engine);
  return X;
}

Vector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 engine = make_engine(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = g(engine);
  return y;
}

KernelSpec random_spec(std::mt19937_64& engine) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> ls(0.4, 2.5);
  switch (pick(engine)) {
    case 0: return sobolev_kernel(1);
    case 1: return sobolev_kernel(2);
    case 2: return matern_kernel(pick(engine) % 2 ? 1.5 : 2.5, ls(engine));
    default: return rbf_kernel(ls(engine));
  }
}

}  // namespace

TEST_CASE("dual coefficients and predictions match a dense-inverse oracle") {
  std::mt19937_64 engine = make_engine(5150);
  std::uniform_int_distribution<int> size(3, 40);
  std::uniform_real_distribution<double> lam(1e-4, 0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const KernelSpec spec = random_spec(engine);
    const bool unit = spec.family == KernelFamily::SobolevBernoulli;
    const Index n = size(engine);
    const Matrix X = random_matrix(n, 2, 7000 + rep, unit ? 0.0 : -1.5, unit ? 1.0 : 1.5);
    const Vector y = random_vector(n, 8000 + rep);
    const double lambda = lam(engine);

    const FittedKrr model = fit(spec, X, y, lambda);

    Matrix A = gram_matrix(spec, X);
    A.diagonal().array() += static_cast<double>(n) * lambda;
    const Vector alpha_oracle = A.inverse() * y;
    CHECK((model.dual_coeffs - alpha_oracle).norm() <= 1e-8 * alpha_oracle.norm());

    const Matrix Q = random_matrix(9, 2, 9000 + rep, unit ? 0.0 : -1.5, unit ? 1.0 : 1.5);
    const Vector pred = predict(model, Q);
    const Vector pred_oracle = cross_gram(spec, Q, X) * alpha_oracle;
    CHECK((pred - pred_oracle).norm() <= 1e-8 * (pred_oracle.norm() + 1e-12));
  }
}

TEST_CASE("masked fits keep the full-sample ridge") {
  // n = 8 rows, 4 masked: the system must carry 8 * lambda on the diagonal,
  // not 4 * lambda.
  const Index n = 8;
  const Matrix X = random_matrix(n, 1, 42, 0.0, 1.0);
  const Vector y = random_vector(n, 43);
  BoolArray mask = BoolArray::Constant(n, false);
  mask[1] = mask[2] = mask[5] = mask[6] = true;
  const double lambda = 0.05;

  const KernelSpec spec = sobolev_kernel(1);
  const FittedKrr model = fit_masked(spec, X, y, mask, lambda);
  REQUIRE(model.dual_coeffs.size() == 4);
  CHECK(model.n_total == n);
  CHECK(model.ridge == doctest::Approx(8.0 * lambda).epsilon(1e-15));

  Matrix Xs(4, 1);
  Xs << X(1, 0), X(2, 0), X(5, 0), X(6, 0);
  Vector ys(4);
  ys << y[1], y[2], y[5], y[6];
  Matrix A = gram_matrix(spec, Xs);
  A.diagonal().array() += 8.0 * lambda;
  const Vector oracle = A.inverse() * ys;
  CHECK((model.dual_coeffs - oracle).norm() <= 1e-10 * oracle.norm());

  Matrix B = gram_matrix(spec, Xs);
  B.diagonal().array() += 4.0 * lambda;  // the wrong normalization
  const Vector wrong = B.inverse() * ys;
  CHECK((model.dual_coeffs - wrong).norm() > 1e-3 * wrong.norm());
}

TEST_CASE("residual invariant holds after the solve") {
  std::mt19937_64 engine = make_engine(77);
  std::uniform_real_distribution<double> lam(1e-10, 1e-2);
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 30;
    Matrix X = random_matrix(n, 2, 600 + rep, 0.0, 1.0);
    // duplicated rows make the Gram singular; only the ridge/jitter path can
    // produce a usable solve
    X.row(5) = X.row(4);
    X.row(20) = X.row(19);
    const Vector y = random_vector(n, 700 + rep);
    const double lambda = lam(engine);
    const FittedKrr model = fit(sobolev_kernel(2), X, y, lambda);
    const Matrix G = gram_matrix(sobolev_kernel(2), X);
    const double resid =
        (G * model.dual_coeffs + model.ridge * model.dual_coeffs - y).norm();
    CHECK(resid <= 1e-6 * y.norm());
  }
}

TEST_CASE("zero responses give exactly zero coefficients") {
  const Matrix X = random_matrix(12, 2, 9, 0.0, 1.0);
  const Vector y = Vector::Zero(12);
  const FittedKrr model = fit(sobolev_kernel(1), X, y, 0.01);
  CHECK(model.dual_coeffs.cwiseAbs().maxCoeff() == 0.0);
  CHECK(predict(model, X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_from_gram reproduces fit bit for bit") {
  const Matrix X = random_matrix(25, 3, 123, -1.0, 1.0);
  const Vector y = random_vector(25, 124);
  const KernelSpec spec = matern_kernel(2.5, 1.1);
  const FittedKrr a = fit(spec, X, y, 0.02);
  const FittedKrr b = fit_from_gram(spec, X, gram_matrix(spec, X), y, 25, 0.02);
  CHECK((a.dual_coeffs - b.dual_coeffs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.ridge == b.ridge);
}

TEST_CASE("invalid inputs are rejected") {
  const Matrix X = random_matrix(6, 1, 1, 0.0, 1.0);
  const Vector y = random_vector(6, 2);
  const KernelSpec spec = sobolev_kernel(1);
  const BoolArray all = BoolArray::Constant(6, true);

  CHECK_THROWS_AS(fit(spec, X, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit(spec, X, y, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(fit(spec, X, y,
                      std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);

  Vector bad = y;
  bad[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fit(spec, X, bad, 0.1), std::invalid_argument);

  const BoolArray none = BoolArray::Constant(6, false);
  CHECK_THROWS_AS(fit_masked(spec, X, y, none, 0.1), std::invalid_argument);

  BoolArray short_mask = BoolArray::Constant(5, true);
  CHECK_THROWS_AS(fit_masked(spec, X, y, short_mask, 0.1), std::invalid_argument);

  CHECK_THROWS_AS(fit(matern_kernel(1.5), X, y, 0.1), std::invalid_argument);

  const FittedKrr model = fit(spec, X, y, 0.1);
  const Matrix Qbad = random_matrix(4, 2, 3, 0.0, 1.0);
  CHECK_THROWS_AS(predict(model, Qbad), std::invalid_argument);
}
