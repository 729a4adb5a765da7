#pragma once

#include <string>

#include "catekrr/harness.hpp"

namespace catekrr {

// Deterministic text renderings: numbers go through fixed printf formats, so
// identical results are identical bytes. Runtime only ever appears in the
// markdown summaries, never in a CSV.

// scenario,method,rep,seed,mse with one row per successful replication.
std::string report_csv(const ExperimentReport& report);

// Mean (SE) per method, failure counts, runtimes, and for the selection-based
// method the chosen-candidate frequencies.
std::string summary_markdown(const ExperimentReport& report);

// n,mean_mse,se_mean,reps,failures
std::string rates_csv(const RateSweepResult& result, int reps);

std::string rates_markdown(const RateSweepResult& result, double theoretical_exponent,
                           double slope_lo, double slope_hi);

// Per-rotation chosen candidates: rotation,label,kernel,lambda,proxy_risk
std::string selected_csv(const CrossFitResult& result);

// Every candidate risk per rotation: rotation,candidate,label,proxy_risk
std::string proxy_risks_csv(const CrossFitResult& result);

// row,cate
std::string predictions_csv(VectorRef values);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace catekrr
