#pragma once

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "catekrr/harness.hpp"

namespace catekrr {

// Invalid configuration or data description. The CLI maps this (and
// ingestion validation failures) to exit code 2, runtime failures to 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::string& path);

// {"family": "sobolev_bernoulli"|"matern"|"rbf", "order_or_nu": ...,
//  "length_scale": number|"median", "active_coords": [ints]|"all"}.
// Unknown keys are fatal, as everywhere in the config surface. "median" (or
// an absent length_scale) leaves the scale to be resolved on the data split
// the kernel is fit on. order_or_nu is rejected for rbf, length_scale for
// sobolev_bernoulli.
KernelSpec kernel_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json kernel_to_json(const KernelSpec& spec);

// A candidate entry before lambda expansion: "lambda" gives one value,
// "lambda_grid" either an explicit list or "dyadic10" (resolved against the
// full sample size at run time).
struct CandidateTemplate {
  std::string label;
  KernelSpec kernel;
  std::vector<double> lambdas;
  bool dyadic = false;
};

std::vector<CandidateConfig> expand_candidates(const std::vector<CandidateTemplate>& templates,
                                               Index n);

// Candidates are expanded at parse time (the sample size is part of the
// scenario), so settings is complete as returned.
struct SimulateConfig {
  ExperimentSettings settings;
};

struct FitConfig {
  std::vector<std::string> covariates;
  std::string treatment;
  std::string outcome;
  KernelSpec nuisance;
  std::vector<CandidateTemplate> candidates;
  std::optional<double> truncation;  // absent: 2 * max |rescaled outcome|
  std::optional<double> bar_lambda;
  std::optional<double> tilde_lambda;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct RatesConfig {
  Scenario scenario = Scenario::Univariate;
  double sigma = 1.0;
  RateMethodSettings method;
  std::vector<Index> n_list;
  int reps = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  Index test_points = 3000;
  double slope_lo = -1.1;
  double slope_hi = -0.5;
  double theoretical_exponent = -0.8;
};

SimulateConfig parse_simulate_config(const nlohmann::json& j);
FitConfig parse_fit_config(const nlohmann::json& j);
RatesConfig parse_rates_config(const nlohmann::json& j);

}  // namespace catekrr
