#include "catekrr/cate.hpp"

#include <stdexcept>

namespace catekrr {

std::pair<FittedKrr, FittedKrr> fit_nuisances(const Dataset& data, const KernelSpec& spec_F,
                                              double bar_lambda) {
  validate(data);
  if (!both_arms_present(data))
    throw std::invalid_argument("cate: both treatment arms required for nuisance fits");
  const KernelSpec spec = resolve_length_scale(spec_F, data.X);
  FittedKrr f0 = fit_masked(spec, data.X, data.Y, arm_mask(data, 0), bar_lambda);
  FittedKrr f1 = fit_masked(spec, data.X, data.Y, arm_mask(data, 1), bar_lambda);
  return {std::move(f0), std::move(f1)};
}

Vector impute_from_predictions(const IntArray& A, VectorRef y, VectorRef f0_at_x,
                               VectorRef f1_at_x) {
  const Index n = A.size();
  if (y.size() != n || f0_at_x.size() != n || f1_at_x.size() != n)
    throw std::invalid_argument("cate: imputation input sizes disagree");
  Vector m(n);
  for (Index i = 0; i < n; ++i) {
    if (A[i] == 1)
      m[i] = y[i] - f0_at_x[i];
    else if (A[i] == 0)
      m[i] = f1_at_x[i] - y[i];
    else
      throw std::invalid_argument("cate: treatment must be 0 or 1");
  }
  return m;
}

Vector switch_impute(const Dataset& data, const FittedKrr& f0, const FittedKrr& f1) {
  validate(data);
  return impute_from_predictions(data.A, data.Y, predict(f0, data.X), predict(f1, data.X));
}

CateEstimator fit_cate(const Dataset& data, const KernelSpec& spec_F,
                       const KernelSpec& stage2_spec, double bar_lambda, double lambda) {
  validate(data);
  CateEstimator est;
  est.bar_lambda = bar_lambda;
  est.lambda = lambda;
  auto [f0, f1] = fit_nuisances(data, spec_F, bar_lambda);
  const Vector m = switch_impute(data, f0, f1);
  const KernelSpec stage2 = resolve_length_scale(stage2_spec, data.X);
  est.second_stage = fit(stage2, data.X, m, lambda);
  est.nuisance0 = std::move(f0);
  est.nuisance1 = std::move(f1);
  return est;
}

Vector predict_cate(const CateEstimator& est, MatrixRef Xq) {
  return predict(est.second_stage, Xq);
}

}  // namespace catekrr
