#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "catekrr/cate.hpp"

namespace catekrr {

// One entry of the candidate dictionary: a second-stage kernel plus its
// regularizer. All candidates share the nuisance kernel and the training
// split.
struct CandidateConfig {
  KernelSpec stage2_spec;
  double lambda = 0.0;
  std::string label;
};

struct SelectionResult {
  std::vector<CandidateConfig> candidates;
  // Candidate estimators trained on the first split; empty where training
  // failed (the matching proxy risk is +infinity and errors[i] says why).
  std::vector<std::optional<CateEstimator>> fitted;
  std::vector<double> proxy_risks;
  std::vector<std::string> errors;
  std::size_t chosen = 0;
  double truncation_level = 0.0;
};

// Disjoint seeded split into sizes ceil(n/3), floor(n/3) and the remainder.
// Every part must contain both treatment arms.
std::array<Dataset, 3> split_three(const Dataset& data, std::uint64_t seed);

// Elementwise clamp to [-level, level].
Vector truncate(VectorRef values, double level);

// Proxy pseudo-outcomes for validation rows: nuisances are fit on d2 with
// regularizer tilde_lambda, predicted at d3's covariates, and switch-imputed
// against d3's observed outcomes.
Vector build_proxies(const Dataset& d2, const Dataset& d3, const KernelSpec& spec_F,
                     double tilde_lambda);

// Trains every candidate on d1 (nuisances and pseudo-outcomes are shared;
// per-kernel Gram matrices are reused across lambdas), truncates candidate
// predictions at +-B, and scores them against proxies built from d2/d3.
// Chooses the minimiser of the mean squared proxy risk, ties going to the
// lowest index. Candidates that fail to train get +infinity risk; if all
// fail, throws.
SelectionResult select(const std::vector<CandidateConfig>& candidates, const Dataset& d1,
                       const Dataset& d2, const Dataset& d3, const KernelSpec& spec_F,
                       double bar_lambda, double tilde_lambda, double B);

// Truncated prediction of the chosen candidate.
Vector predict_selected(const SelectionResult& result, MatrixRef Xq);

}  // namespace catekrr
