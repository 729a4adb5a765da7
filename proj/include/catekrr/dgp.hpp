#pragma once

#include <cstdint>
#include <string>

#include "catekrr/dataset.hpp"

namespace catekrr {

// Synthetic designs with known effect functions.
//
// Univariate:  x ~ U[0,1],        f0(x) = 5(|x-0.4| + |x-0.8|), h(x) = x^2
// MultiDense:  x ~ U[-1,1]^10,    f0(x) = (2/10) sum_j sin(x_j),
//                                 h(x) = (0.5/10) sum_j x_j
// MultiSparse: same x and f0,     h(x) = (0.3/4) sum_{j<4} x_j^2
//
// All designs share the propensity pi(x) = clip(sin(5 ||x||_2), 0.1, 0.9),
// treatment a ~ Bernoulli(pi(x)) and outcome y = f0(x) + a h(x) + eps with
// eps ~ N(0, sigma^2).
enum class Scenario { Univariate, MultiDense, MultiSparse };

struct ScenarioSpec {
  Scenario scenario = Scenario::Univariate;
  Index n = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

Index scenario_dim(Scenario scenario);
std::string scenario_name(Scenario scenario);
Scenario scenario_from_name(const std::string& name);

double baseline_mean(Scenario scenario, VectorRef x);
double true_cate(Scenario scenario, VectorRef x);
double propensity(VectorRef x);

// Draws n rows. Per row the draw order is fixed (covariates, treatment
// uniform, noise), so datasets with the same seed agree for any prefix logic
// downstream. Requires n >= 10, sigma >= 0.
Dataset generate(const ScenarioSpec& spec);

// Fresh covariate draws from the scenario's design distribution, independent
// of the training stream.
Matrix test_grid(Scenario scenario, Index points, std::uint64_t seed);

Vector true_cate_values(Scenario scenario, MatrixRef X);

}  // namespace catekrr
