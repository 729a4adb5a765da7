#pragma once

#include <string>
#include <vector>

#include "catekrr/dataset.hpp"

namespace catekrr {

// Affine map from an observed column range onto [0,1].
struct ColumnScale {
  double lo = 0.0;
  double hi = 1.0;
  double forward(double v) const { return (v - lo) / (hi - lo); }
  double inverse(double u) const { return lo + u * (hi - lo); }
  double span() const { return hi - lo; }
};

struct IngestedData {
  Dataset data;  // covariates and outcome min-max rescaled to [0,1]
  std::vector<std::string> covariate_cols;
  std::string treatment_col;
  std::string outcome_col;
  std::vector<ColumnScale> covariate_scales;
  ColumnScale outcome_scale;

  // Effects learned on the rescaled outcome multiply by the outcome span to
  // return to the original units.
  double cate_unscale_factor() const { return outcome_scale.span(); }
};

// Reads a UTF-8 CSV with a header row. Selected covariate columns and the
// outcome are min-max rescaled to [0,1] (scales retained); the treatment
// column must be exactly 0 or 1. Errors identify the offending column or
// 1-based file line: missing columns, malformed or short rows, non-numeric
// fields, constant columns (zero range), fewer than 10 rows.
IngestedData ingest_csv(const std::string& path, const std::vector<std::string>& covariates,
                        const std::string& treatment, const std::string& outcome);

}  // namespace catekrr
