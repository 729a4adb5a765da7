#pragma once

#include "catekrr/common.hpp"
#include "catekrr/kernels.hpp"

namespace catekrr {

// Kernel ridge regression fit on a row subset S of a sample of size n_total.
// The dual coefficients solve (G_SS + ridge I) alpha = y_S with
// ridge = n_total * lambda: the least-squares term is averaged over the full
// sample size even when only the masked rows enter the loss, which is what
// makes arm-wise fits on a shared sample comparable.
struct FittedKrr {
  KernelSpec spec;
  Matrix train_points;  // masked rows, |S| x d
  Vector dual_coeffs;   // |S|
  double ridge = 0.0;   // n_total * lambda
  Index n_total = 0;
};

// Fits on the rows where mask is true. Requires a resolved spec, lambda > 0,
// and at least one masked row. The solve uses Cholesky with escalating
// diagonal jitter (starting at 1e-10 * trace(G)/|S|, growing tenfold, at most
// six retries); it fails if the residual in the unjittered system still
// exceeds 1e-6 * ||y_S||.
FittedKrr fit_masked(const KernelSpec& spec, MatrixRef X, VectorRef y, const BoolArray& mask,
                     double lambda);

// fit_masked with an all-true mask.
FittedKrr fit(const KernelSpec& spec, MatrixRef X, VectorRef y, double lambda);

// Fit from a precomputed Gram matrix of train_points (all rows are used,
// n_total supplied by the caller). Same solver and residual policy as
// fit_masked; exists so grids of lambdas can share one Gram.
FittedKrr fit_from_gram(const KernelSpec& spec, MatrixRef train_points, MatrixRef gram,
                        VectorRef y, Index n_total, double lambda);

Vector predict(const FittedKrr& model, MatrixRef Xq);

}  // namespace catekrr
