#include "catekrr/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace catekrr {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string num4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string seed_str(std::uint64_t s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRIu64, s);
  return buf;
}

// Quote a CSV field only when it needs it.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

std::string report_csv(const ExperimentReport& report) {
  std::string out = "scenario,method,rep,seed,mse\n";
  for (const MethodReport& m : report.methods) {
    for (const RepRecord& r : m.reps) {
      if (!r.ok) continue;
      out += scenario_name(report.scenario) + "," + method_name(m.method) + "," +
             std::to_string(r.rep) + "," + seed_str(r.seed) + "," + num(r.mse) + "\n";
    }
  }
  return out;
}

std::string summary_markdown(const ExperimentReport& report) {
  std::string out = "# " + scenario_name(report.scenario) +
                    ", n = " + std::to_string(report.n) + ", sigma = " + num(report.sigma) +
                    "\n\n" + std::to_string(report.methods.empty()
                                                ? 0
                                                : static_cast<int>(report.methods[0].reps.size())) +
                    " replications, master seed " + seed_str(report.master_seed) + ".\n\n";
  out += "| method | mean MSE (SE) | failures | runtime (s) |\n";
  out += "|---|---|---|---|\n";
  for (const MethodReport& m : report.methods) {
    out += "| " + method_name(m.method) + " | " + num4(m.mean_mse) + " (" + num4(m.se_mean) +
           ") | " + std::to_string(m.failures) + " | " + num4(m.runtime_sec) + " |\n";
  }
  for (const MethodReport& m : report.methods) {
    if (m.method != Method::Ours) continue;
    std::map<std::string, int> counts;
    for (const RepRecord& r : m.reps)
      if (r.ok) ++counts[r.selected_label];
    out += "\nSelected candidates:\n\n| candidate | picked |\n|---|---|\n";
    for (const auto& [label, count] : counts)
      out += "| " + label + " | " + std::to_string(count) + " |\n";
  }
  return out;
}

std::string rates_csv(const RateSweepResult& result, int reps) {
  std::string out = "n,mean_mse,se_mean,reps,failures\n";
  for (const RatePoint& pt : result.points)
    out += std::to_string(pt.n) + "," + num(pt.mean_mse) + "," + num(pt.se_mean) + "," +
           std::to_string(reps) + "," + std::to_string(pt.failures) + "\n";
  return out;
}

std::string rates_markdown(const RateSweepResult& result, double theoretical_exponent,
                           double slope_lo, double slope_hi) {
  const bool inside = result.slope >= slope_lo && result.slope <= slope_hi;
  std::string out = "# Convergence sweep\n\n";
  out += "| n | mean MSE | SE |\n|---|---|---|\n";
  for (const RatePoint& pt : result.points)
    out += "| " + std::to_string(pt.n) + " | " + num(pt.mean_mse) + " | " + num(pt.se_mean) +
           " |\n";
  out += "\nFitted log-log slope: " + num(result.slope) + "\n";
  out += "Theoretical exponent: " + num(theoretical_exponent) + "\n";
  out += "Tolerance band: [" + num(slope_lo) + ", " + num(slope_hi) + "]\n";
  out += std::string("Verdict: ") + (inside ? "PASS" : "FAIL") + "\n";
  return out;
}

std::string selected_csv(const CrossFitResult& result) {
  std::string out = "rotation,label,kernel,lambda,proxy_risk\n";
  for (std::size_t i = 0; i < result.selections.size(); ++i) {
    const SelectionResult& sel = result.selections[i];
    const CandidateConfig& c = sel.candidates[sel.chosen];
    const KernelSpec resolved = sel.fitted[sel.chosen]
                                    ? sel.fitted[sel.chosen]->second_stage.spec
                                    : c.stage2_spec;
    out += std::to_string(result.rotation[i]) + "," + csv_field(c.label) + "," +
           csv_field(describe(resolved)) + "," + num(c.lambda) + "," +
           num(sel.proxy_risks[sel.chosen]) + "\n";
  }
  return out;
}

std::string proxy_risks_csv(const CrossFitResult& result) {
  std::string out = "rotation,candidate,label,proxy_risk\n";
  for (std::size_t i = 0; i < result.selections.size(); ++i) {
    const SelectionResult& sel = result.selections[i];
    for (std::size_t c = 0; c < sel.candidates.size(); ++c)
      out += std::to_string(result.rotation[i]) + "," + std::to_string(c) + "," +
             csv_field(sel.candidates[c].label) + "," + num(sel.proxy_risks[c]) + "\n";
  }
  return out;
}

std::string predictions_csv(VectorRef values) {
  std::string out = "row,cate\n";
  for (Index i = 0; i < values.size(); ++i)
    out += std::to_string(i) + "," + num(values[i]) + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace catekrr
