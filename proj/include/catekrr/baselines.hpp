#pragma once

#include <cstdint>
#include <vector>

#include "catekrr/cate.hpp"

namespace catekrr {

// {2^{j-1} / n : j = 1..count}, ascending. The default grid used by the
// cross-validated baselines.
std::vector<double> dyadic_lambda_grid(Index n, int count = 10);

// Mean out-of-fold squared error over a seeded k-fold partition of the
// masked rows, one fit per (fold, lambda). Ties break to the largest lambda.
// Requires k >= 2 and at least k masked rows.
double kfold_cv_lambda(const KernelSpec& spec, MatrixRef X, VectorRef y, const BoolArray& mask,
                       const std::vector<double>& grid, int folds, std::uint64_t seed);

// Plug-in estimator: per-arm KRR with its own cross-validated lambda, CATE
// predicted as the difference of the refit arms.
struct PluginEstimator {
  FittedKrr f0;
  FittedKrr f1;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
};

PluginEstimator plugin_cate(const Dataset& data, const KernelSpec& spec_F,
                            const std::vector<double>& grid, int folds, std::uint64_t seed);

Vector predict(const PluginEstimator& est, MatrixRef Xq);

// Doubly robust pseudo-outcomes:
//   psi_i = f1(x_i) - f0(x_i) + a_i (y_i - f1(x_i)) / e_i
//                             - (1 - a_i) (y_i - f0(x_i)) / (1 - e_i).
// E[psi | x] = h(x) at the true nuisances for any propensity in (0,1).
Vector dr_pseudo_outcomes(const IntArray& A, VectorRef y, VectorRef f0_at_x,
                          VectorRef f1_at_x, VectorRef propensity);

// Two-way sample split: arm regressions and a propensity fit (KRR of A on X,
// predictions clipped to [0.01, 0.99]) on the first half, pseudo-outcomes and
// the cross-validated second-stage regression on the second half.
struct DrEstimator {
  FittedKrr f0;
  FittedKrr f1;
  FittedKrr propensity_fit;
  FittedKrr second_stage;
  double stage2_lambda = 0.0;
};

DrEstimator dr_learner(const Dataset& data, const KernelSpec& spec_F,
                       const KernelSpec& stage2_spec, const std::vector<double>& grid,
                       int folds, std::uint64_t seed);

Vector predict(const DrEstimator& est, MatrixRef Xq);

}  // namespace catekrr
