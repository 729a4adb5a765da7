#pragma once

#include <vector>

#include "catekrr/common.hpp"

namespace catekrr {

// Observational sample: covariates X (n x d), binary treatment A, outcome Y.
struct Dataset {
  Matrix X;
  IntArray A;
  Vector Y;

  Index n() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

// Throws std::invalid_argument on size mismatches, non-finite X or Y, or
// treatment values outside {0, 1}.
void validate(const Dataset& data);

bool both_arms_present(const Dataset& data);

BoolArray arm_mask(const Dataset& data, int arm);

Dataset subset(const Dataset& data, const std::vector<Index>& rows);

}  // namespace catekrr
