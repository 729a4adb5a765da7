#pragma once

#include <utility>

#include "catekrr/dataset.hpp"
#include "catekrr/krr.hpp"

namespace catekrr {

// Two-stage regression for the conditional average treatment effect.
// Stage one fits one undersmoothed KRR per arm on its own rows (shared
// full-sample ridge normalization). Stage two regresses switch-imputed
// pseudo-outcomes on all rows. No truncation here; truncation belongs to
// model selection.
struct CateEstimator {
  FittedKrr nuisance0;
  FittedKrr nuisance1;
  FittedKrr second_stage;
  double bar_lambda = 0.0;  // nuisance regularizer
  double lambda = 0.0;      // second-stage regularizer
};

// Nuisance default: deliberately undersmoothed relative to the n^{-1}-ish
// rates a tuned fit would use.
inline double default_bar_lambda(Index n) { return 0.01 / static_cast<double>(n); }

// Per-arm KRR fits of Y on X over {A == 0} and {A == 1}. Requires both arms
// present. An unresolved length scale on spec_F resolves on all rows of
// data.X (arm masks do not affect length scales, so both arms share one
// kernel and live in the same function space).
std::pair<FittedKrr, FittedKrr> fit_nuisances(const Dataset& data, const KernelSpec& spec_F,
                                              double bar_lambda);

// Switch imputation: m_i = y_i - f0(x_i) for treated rows, f1(x_i) - y_i for
// control rows. Either way the imputation is E[m_i | x_i] = h(x_i) when the
// plugged-in predictions are the true arm means.
Vector impute_from_predictions(const IntArray& A, VectorRef y, VectorRef f0_at_x,
                               VectorRef f1_at_x);

// impute_from_predictions with predictions from fitted nuisances.
Vector switch_impute(const Dataset& data, const FittedKrr& f0, const FittedKrr& f1);

// Full two-stage fit. Unresolved length scales on either spec resolve on
// data.X. Throws on single-arm data or failed solves.
CateEstimator fit_cate(const Dataset& data, const KernelSpec& spec_F,
                       const KernelSpec& stage2_spec, double bar_lambda, double lambda);

Vector predict_cate(const CateEstimator& est, MatrixRef Xq);

}  // namespace catekrr
