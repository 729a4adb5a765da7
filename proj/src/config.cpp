#include "catekrr/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace catekrr {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail("'" + where + "' must be an object");
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  require_object(j, where);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail("unknown key '" + item.key() + "' in '" + where + "'");
  }
}

const json& require_key(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail("missing key '" + std::string(key) + "' in '" + where + "'");
  return j.at(key);
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail("'" + where + "' must be a number");
  return j.get<double>();
}

double get_positive(const json& j, const std::string& where) {
  const double v = get_number(j, where);
  if (!(std::isfinite(v) && v > 0.0)) fail("'" + where + "' must be positive and finite");
  return v;
}

long long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail("'" + where + "' must be an integer");
  return j.get<long long>();
}

std::uint64_t get_seed(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0)
    return static_cast<std::uint64_t>(j.get<long long>());
  fail("'" + where + "' must be a non-negative integer");
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail("'" + where + "' must be a string");
  return j.get<std::string>();
}

// "default" or a positive number.
std::optional<double> get_lambda_or_default(const json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "default") return std::nullopt;
    fail("'" + where + "' must be a positive number or \"default\"");
  }
  return get_positive(j, where);
}

std::vector<double> get_lambda_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail("'" + where + "' must be a non-empty array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_positive(j.at(i), where + "[" + std::to_string(i) + "]"));
  return out;
}

std::string format_lambda(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<CandidateTemplate> parse_candidates(const json& j) {
  if (!j.is_array() || j.empty()) fail("'candidates' must be a non-empty array");
  std::vector<CandidateTemplate> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "candidates[" + std::to_string(i) + "]";
    const json& c = j.at(i);
    check_keys(c, where, {"label", "kernel", "lambda", "lambda_grid"});
    CandidateTemplate t;
    t.kernel = kernel_from_json(require_key(c, where, "kernel"), where + ".kernel");
    t.label = c.contains("label") ? get_string(c.at("label"), where + ".label")
                                  : "cand" + std::to_string(i);
    if (t.label.empty()) fail("'" + where + ".label' must be non-empty");
    const bool has_single = c.contains("lambda");
    const bool has_grid = c.contains("lambda_grid");
    if (has_single == has_grid)
      fail("'" + where + "' needs exactly one of 'lambda' and 'lambda_grid'");
    if (has_single) {
      t.lambdas = {get_positive(c.at("lambda"), where + ".lambda")};
    } else if (c.at("lambda_grid").is_string()) {
      if (c.at("lambda_grid").get<std::string>() != "dyadic10")
        fail("'" + where + ".lambda_grid' must be \"dyadic10\" or an array");
      t.dyadic = true;
    } else {
      t.lambdas = get_lambda_list(c.at("lambda_grid"), where + ".lambda_grid");
    }
    out.push_back(std::move(t));
  }
  std::set<std::string> labels;
  for (const CandidateTemplate& t : out)
    if (!labels.insert(t.label).second) fail("duplicate candidate label '" + t.label + "'");
  return out;
}

struct SelectionSection {
  std::optional<double> truncation;
  std::optional<double> bar_lambda;
  std::optional<double> tilde_lambda;
};

SelectionSection parse_selection(const json& j, bool truncation_required) {
  check_keys(j, "selection", {"truncation", "bar_lambda", "tilde_lambda"});
  SelectionSection s;
  if (j.contains("truncation"))
    s.truncation = get_positive(j.at("truncation"), "selection.truncation");
  else if (truncation_required)
    fail("missing key 'truncation' in 'selection'");
  if (j.contains("bar_lambda"))
    s.bar_lambda = get_lambda_or_default(j.at("bar_lambda"), "selection.bar_lambda");
  if (j.contains("tilde_lambda"))
    s.tilde_lambda = get_lambda_or_default(j.at("tilde_lambda"), "selection.tilde_lambda");
  return s;
}

}  // namespace

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path + "': " + e.what());
  }
  return j;
}

KernelSpec kernel_from_json(const nlohmann::json& j, const std::string& where) {
  check_keys(j, where, {"family", "order_or_nu", "length_scale", "active_coords"});
  KernelSpec spec;
  const std::string family = get_string(require_key(j, where, "family"), where + ".family");
  if (family == "sobolev_bernoulli")
    spec.family = KernelFamily::SobolevBernoulli;
  else if (family == "matern")
    spec.family = KernelFamily::Matern;
  else if (family == "rbf")
    spec.family = KernelFamily::Rbf;
  else
    fail("'" + where + ".family' must be sobolev_bernoulli, matern or rbf");

  if (spec.family == KernelFamily::Rbf) {
    if (j.contains("order_or_nu")) fail("'" + where + "': rbf takes no 'order_or_nu'");
    spec.order_or_nu = 0.0;
  } else {
    spec.order_or_nu =
        get_number(require_key(j, where, "order_or_nu"), where + ".order_or_nu");
  }

  if (j.contains("length_scale")) {
    if (spec.family == KernelFamily::SobolevBernoulli)
      fail("'" + where + "': sobolev_bernoulli takes no 'length_scale'");
    const json& ls = j.at("length_scale");
    if (ls.is_string()) {
      if (ls.get<std::string>() != "median")
        fail("'" + where + ".length_scale' must be a positive number or \"median\"");
    } else {
      spec.length_scale = get_positive(ls, where + ".length_scale");
    }
  }

  if (j.contains("active_coords")) {
    const json& ac = j.at("active_coords");
    if (ac.is_string()) {
      if (ac.get<std::string>() != "all")
        fail("'" + where + ".active_coords' must be \"all\" or an array of indices");
    } else if (ac.is_array()) {
      for (std::size_t i = 0; i < ac.size(); ++i) {
        const long long v =
            get_int(ac.at(i), where + ".active_coords[" + std::to_string(i) + "]");
        if (v < 0) fail("'" + where + ".active_coords' entries must be non-negative");
        spec.active_coords.push_back(static_cast<Index>(v));
      }
    } else {
      fail("'" + where + ".active_coords' must be \"all\" or an array of indices");
    }
  }

  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    fail("'" + where + "': " + e.what());
  }
  return spec;
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  json j;
  switch (spec.family) {
    case KernelFamily::SobolevBernoulli:
      j["family"] = "sobolev_bernoulli";
      j["order_or_nu"] = spec.order_or_nu;
      break;
    case KernelFamily::Matern:
      j["family"] = "matern";
      j["order_or_nu"] = spec.order_or_nu;
      break;
    case KernelFamily::Rbf:
      j["family"] = "rbf";
      break;
  }
  if (needs_length_scale(spec)) {
    if (spec.length_scale)
      j["length_scale"] = *spec.length_scale;
    else
      j["length_scale"] = "median";
  }
  if (spec.active_coords.empty()) {
    j["active_coords"] = "all";
  } else {
    json arr = json::array();
    for (Index v : spec.active_coords) arr.push_back(static_cast<long long>(v));
    j["active_coords"] = arr;
  }
  return j;
}

std::vector<CandidateConfig> expand_candidates(const std::vector<CandidateTemplate>& templates,
                                               Index n) {
  std::vector<CandidateConfig> out;
  for (const CandidateTemplate& t : templates) {
    const std::vector<double> lambdas = t.dyadic ? dyadic_lambda_grid(n) : t.lambdas;
    const bool suffix = t.dyadic || lambdas.size() > 1;
    for (double l : lambdas) {
      CandidateConfig c;
      c.stage2_spec = t.kernel;
      c.lambda = l;
      c.label = suffix ? t.label + "@" + format_lambda(l) : t.label;
      out.push_back(std::move(c));
    }
  }
  return out;
}

SimulateConfig parse_simulate_config(const nlohmann::json& j) {
  check_keys(j, "config",
             {"scenario", "kernels", "candidates", "selection", "methods", "execution"});
  SimulateConfig cfg;
  ExperimentSettings& s = cfg.settings;

  const json& scenario = require_key(j, "config", "scenario");
  check_keys(scenario, "scenario", {"name", "n", "sigma"});
  try {
    s.scenario = scenario_from_name(
        get_string(require_key(scenario, "scenario", "name"), "scenario.name"));
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  const long long n = get_int(require_key(scenario, "scenario", "n"), "scenario.n");
  if (n < 10) fail("'scenario.n' must be at least 10");
  s.n = static_cast<Index>(n);
  if (scenario.contains("sigma")) {
    s.sigma = get_number(scenario.at("sigma"), "scenario.sigma");
    if (!(std::isfinite(s.sigma) && s.sigma >= 0.0))
      fail("'scenario.sigma' must be non-negative and finite");
  }

  const json& methods = require_key(j, "config", "methods");
  if (!methods.is_array() || methods.empty()) fail("'methods' must be a non-empty array");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string name =
        get_string(methods.at(i), "methods[" + std::to_string(i) + "]");
    Method m;
    if (name == "ours")
      m = Method::Ours;
    else if (name == "plugin")
      m = Method::PlugIn;
    else if (name == "dr")
      m = Method::DrLearner;
    else
      fail("unknown method '" + name + "' (expected ours, plugin or dr)");
    if (std::find(s.methods.begin(), s.methods.end(), m) != s.methods.end())
      fail("duplicate method '" + name + "'");
    s.methods.push_back(m);
  }
  const bool wants_ours =
      std::find(s.methods.begin(), s.methods.end(), Method::Ours) != s.methods.end();
  const bool wants_dr =
      std::find(s.methods.begin(), s.methods.end(), Method::DrLearner) != s.methods.end();

  const json& kernels = require_key(j, "config", "kernels");
  check_keys(kernels, "kernels", {"nuisance", "dr_stage2"});
  s.nuisance = kernel_from_json(require_key(kernels, "kernels", "nuisance"), "kernels.nuisance");
  if (kernels.contains("dr_stage2"))
    s.baselines.dr_stage2 = kernel_from_json(kernels.at("dr_stage2"), "kernels.dr_stage2");
  if (wants_dr && !s.baselines.dr_stage2)
    fail("method 'dr' requires 'kernels.dr_stage2'");

  if (wants_ours || j.contains("candidates")) {
    if (!j.contains("candidates")) fail("method 'ours' requires 'candidates'");
    s.selection.candidates = expand_candidates(parse_candidates(j.at("candidates")), s.n);
  }
  if (wants_ours || j.contains("selection")) {
    if (!j.contains("selection")) fail("method 'ours' requires 'selection'");
    const SelectionSection sel = parse_selection(j.at("selection"), wants_ours);
    if (sel.truncation) s.selection.truncation = *sel.truncation;
    s.selection.bar_lambda = sel.bar_lambda;
    s.selection.tilde_lambda = sel.tilde_lambda;
  }

  const json& execution = require_key(j, "config", "execution");
  check_keys(execution, "execution",
             {"reps", "seed", "threads", "test_points", "cv_folds", "cv_grid"});
  const long long reps = get_int(require_key(execution, "execution", "reps"), "execution.reps");
  if (reps < 1) fail("'execution.reps' must be at least 1");
  s.reps = static_cast<int>(reps);
  if (execution.contains("seed")) s.master_seed = get_seed(execution.at("seed"), "execution.seed");
  if (execution.contains("threads")) {
    const long long t = get_int(execution.at("threads"), "execution.threads");
    if (t < 0) fail("'execution.threads' must be non-negative");
    s.threads = static_cast<int>(t);
  }
  if (execution.contains("test_points")) {
    const long long q = get_int(execution.at("test_points"), "execution.test_points");
    if (q < 1) fail("'execution.test_points' must be at least 1");
    s.test_points = static_cast<Index>(q);
  }
  if (execution.contains("cv_folds")) {
    const long long f = get_int(execution.at("cv_folds"), "execution.cv_folds");
    if (f < 2) fail("'execution.cv_folds' must be at least 2");
    s.baselines.cv_folds = static_cast<int>(f);
  }
  if (execution.contains("cv_grid")) {
    const json& g = execution.at("cv_grid");
    if (g.is_string()) {
      if (g.get<std::string>() != "dyadic10")
        fail("'execution.cv_grid' must be \"dyadic10\" or an array");
    } else {
      s.baselines.cv_grid = get_lambda_list(g, "execution.cv_grid");
    }
  }
  return cfg;
}

FitConfig parse_fit_config(const nlohmann::json& j) {
  check_keys(j, "config", {"data", "kernels", "candidates", "selection", "execution"});
  FitConfig cfg;

  const json& data = require_key(j, "config", "data");
  check_keys(data, "data", {"covariates", "treatment", "outcome"});
  const json& covs = require_key(data, "data", "covariates");
  if (!covs.is_array() || covs.empty()) fail("'data.covariates' must be a non-empty array");
  for (std::size_t i = 0; i < covs.size(); ++i)
    cfg.covariates.push_back(
        get_string(covs.at(i), "data.covariates[" + std::to_string(i) + "]"));
  {
    std::set<std::string> seen;
    for (const std::string& c : cfg.covariates)
      if (!seen.insert(c).second) fail("duplicate covariate column '" + c + "'");
  }
  cfg.treatment = get_string(require_key(data, "data", "treatment"), "data.treatment");
  cfg.outcome = get_string(require_key(data, "data", "outcome"), "data.outcome");
  if (cfg.treatment == cfg.outcome) fail("'data.treatment' and 'data.outcome' must differ");
  for (const std::string& c : cfg.covariates)
    if (c == cfg.treatment || c == cfg.outcome)
      fail("column '" + c + "' cannot be both a covariate and a role column");

  const json& kernels = require_key(j, "config", "kernels");
  check_keys(kernels, "kernels", {"nuisance"});
  cfg.nuisance =
      kernel_from_json(require_key(kernels, "kernels", "nuisance"), "kernels.nuisance");

  cfg.candidates = parse_candidates(require_key(j, "config", "candidates"));

  if (j.contains("selection")) {
    const SelectionSection sel = parse_selection(j.at("selection"), false);
    cfg.truncation = sel.truncation;
    cfg.bar_lambda = sel.bar_lambda;
    cfg.tilde_lambda = sel.tilde_lambda;
  }

  if (j.contains("execution")) {
    const json& execution = j.at("execution");
    check_keys(execution, "execution", {"seed", "threads"});
    if (execution.contains("seed"))
      cfg.seed = get_seed(execution.at("seed"), "execution.seed");
    if (execution.contains("threads")) {
      const long long t = get_int(execution.at("threads"), "execution.threads");
      if (t < 0) fail("'execution.threads' must be non-negative");
      cfg.threads = static_cast<int>(t);
    }
  }
  return cfg;
}

RatesConfig parse_rates_config(const nlohmann::json& j) {
  check_keys(j, "config", {"scenario", "kernels", "execution"});
  RatesConfig cfg;

  const json& scenario = require_key(j, "config", "scenario");
  check_keys(scenario, "scenario", {"name", "sigma"});
  try {
    cfg.scenario = scenario_from_name(
        get_string(require_key(scenario, "scenario", "name"), "scenario.name"));
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (scenario.contains("sigma")) {
    cfg.sigma = get_number(scenario.at("sigma"), "scenario.sigma");
    if (!(std::isfinite(cfg.sigma) && cfg.sigma >= 0.0))
      fail("'scenario.sigma' must be non-negative and finite");
  }

  const json& execution = require_key(j, "config", "execution");
  check_keys(execution, "execution",
             {"n_list", "reps", "seed", "threads", "test_points", "lambda_coef",
              "lambda_exponent", "bar_lambda", "slope_band", "theoretical_exponent", "method"});

  if (execution.contains("method")) {
    const std::string m = get_string(execution.at("method"), "execution.method");
    if (m == "flat")
      cfg.method.flat = true;
    else if (m != "algorithm1")
      fail("'execution.method' must be \"algorithm1\" or \"flat\"");
  }

  if (!cfg.method.flat) {
    const json& kernels = require_key(j, "config", "kernels");
    check_keys(kernels, "kernels", {"nuisance", "stage2"});
    cfg.method.nuisance =
        kernel_from_json(require_key(kernels, "kernels", "nuisance"), "kernels.nuisance");
    cfg.method.stage2 =
        kernel_from_json(require_key(kernels, "kernels", "stage2"), "kernels.stage2");
  } else if (j.contains("kernels")) {
    check_keys(j.at("kernels"), "kernels", {"nuisance", "stage2"});
  }

  const json& nl = require_key(execution, "execution", "n_list");
  if (!nl.is_array() || nl.size() < 3)
    fail("'execution.n_list' must be an array of at least three sizes");
  for (std::size_t i = 0; i < nl.size(); ++i) {
    const long long n = get_int(nl.at(i), "execution.n_list[" + std::to_string(i) + "]");
    if (n < 10) fail("'execution.n_list' entries must be at least 10");
    if (!cfg.n_list.empty() && static_cast<Index>(n) <= cfg.n_list.back())
      fail("'execution.n_list' must be strictly increasing");
    cfg.n_list.push_back(static_cast<Index>(n));
  }

  const long long reps = get_int(require_key(execution, "execution", "reps"), "execution.reps");
  if (reps < 1) fail("'execution.reps' must be at least 1");
  cfg.reps = static_cast<int>(reps);
  if (execution.contains("seed")) cfg.seed = get_seed(execution.at("seed"), "execution.seed");
  if (execution.contains("threads")) {
    const long long t = get_int(execution.at("threads"), "execution.threads");
    if (t < 0) fail("'execution.threads' must be non-negative");
    cfg.threads = static_cast<int>(t);
  }
  if (execution.contains("test_points")) {
    const long long q = get_int(execution.at("test_points"), "execution.test_points");
    if (q < 1) fail("'execution.test_points' must be at least 1");
    cfg.test_points = static_cast<Index>(q);
  }
  if (execution.contains("lambda_coef"))
    cfg.method.lambda_coef = get_positive(execution.at("lambda_coef"), "execution.lambda_coef");
  if (execution.contains("lambda_exponent")) {
    cfg.method.lambda_exponent =
        get_number(execution.at("lambda_exponent"), "execution.lambda_exponent");
    if (!std::isfinite(cfg.method.lambda_exponent))
      fail("'execution.lambda_exponent' must be finite");
  }
  if (execution.contains("bar_lambda"))
    cfg.method.bar_lambda =
        get_lambda_or_default(execution.at("bar_lambda"), "execution.bar_lambda");
  if (execution.contains("slope_band")) {
    const json& band = execution.at("slope_band");
    if (!band.is_array() || band.size() != 2)
      fail("'execution.slope_band' must be [low, high]");
    cfg.slope_lo = get_number(band.at(0), "execution.slope_band[0]");
    cfg.slope_hi = get_number(band.at(1), "execution.slope_band[1]");
    if (!(cfg.slope_lo < cfg.slope_hi))
      fail("'execution.slope_band' must satisfy low < high");
  }
  if (execution.contains("theoretical_exponent")) {
    cfg.theoretical_exponent =
        get_number(execution.at("theoretical_exponent"), "execution.theoretical_exponent");
    if (!std::isfinite(cfg.theoretical_exponent))
      fail("'execution.theoretical_exponent' must be finite");
  }
  return cfg;
}

}  // namespace catekrr
