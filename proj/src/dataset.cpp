#include "catekrr/dataset.hpp"

#include <stdexcept>
#include <string>

namespace catekrr {

void validate(const Dataset& data) {
  if (data.X.rows() != data.A.size() || data.X.rows() != data.Y.size())
    throw std::invalid_argument("dataset: X, A and Y sizes disagree");
  if (data.X.rows() == 0) throw std::invalid_argument("dataset: empty");
  if (!data.X.allFinite()) throw std::invalid_argument("dataset: non-finite covariates");
  if (!data.Y.allFinite()) throw std::invalid_argument("dataset: non-finite outcomes");
  for (Index i = 0; i < data.A.size(); ++i)
    if (data.A[i] != 0 && data.A[i] != 1)
      throw std::invalid_argument("dataset: treatment must be 0 or 1 (row " +
                                  std::to_string(i) + ")");
}

bool both_arms_present(const Dataset& data) {
  bool has0 = false, has1 = false;
  for (Index i = 0; i < data.A.size(); ++i) {
    if (data.A[i] == 0) has0 = true;
    if (data.A[i] == 1) has1 = true;
    if (has0 && has1) return true;
  }
  return false;
}

BoolArray arm_mask(const Dataset& data, int arm) {
  BoolArray mask(data.A.size());
  for (Index i = 0; i < data.A.size(); ++i) mask[i] = (data.A[i] == arm);
  return mask;
}

Dataset subset(const Dataset& data, const std::vector<Index>& rows) {
  Dataset out;
  out.X.resize(static_cast<Index>(rows.size()), data.X.cols());
  out.A.resize(static_cast<Index>(rows.size()));
  out.Y.resize(static_cast<Index>(rows.size()));
  Index r = 0;
  for (Index i : rows) {
    if (i < 0 || i >= data.n())
      throw std::invalid_argument("dataset: subset row index out of range");
    out.X.row(r) = data.X.row(i);
    out.A[r] = data.A[i];
    out.Y[r] = data.Y[i];
    ++r;
  }
  return out;
}

}  // namespace catekrr
