#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "catekrr/config.hpp"
#include "catekrr/csv.hpp"
#include "catekrr/report.hpp"

namespace {

using namespace catekrr;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON configuration file")->required();
  cmd->add_option("--out", args.out_dir, "output directory (created if missing)")->required();
  cmd->add_option("--seed", args.seed, "override the configured seed");
  cmd->add_option("--threads", args.threads, "override the configured worker count");
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

int cmd_simulate(const CommonArgs& args) {
  SimulateConfig cfg = parse_simulate_config(load_json_file(args.config_path));
  if (args.seed) cfg.settings.master_seed = *args.seed;
  if (args.threads) cfg.settings.threads = *args.threads;

  const ExperimentReport report = run_experiment(cfg.settings);
  const std::filesystem::path out = prepare_out_dir(args.out_dir);
  write_text_file((out / "report.csv").string(), report_csv(report));
  write_text_file((out / "summary.md").string(), summary_markdown(report));

  for (const MethodReport& m : report.methods)
    std::printf("%s: mean MSE %.6g (SE %.3g), %d failures\n", method_name(m.method).c_str(),
                m.mean_mse, m.se_mean, m.failures);
  std::printf("wrote %s and %s\n", (out / "report.csv").c_str(), (out / "summary.md").c_str());
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& data_path) {
  FitConfig cfg = parse_fit_config(load_json_file(args.config_path));
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;

  // Every ingestion failure (unreadable file included) is a usage error.
  IngestedData ingested;
  try {
    ingested = ingest_csv(data_path, cfg.covariates, cfg.treatment, cfg.outcome);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  CrossFitSettings settings;
  settings.nuisance = cfg.nuisance;
  settings.selection.candidates = expand_candidates(cfg.candidates, ingested.data.n());
  settings.selection.truncation =
      cfg.truncation.value_or(2.0 * ingested.data.Y.cwiseAbs().maxCoeff());
  settings.selection.bar_lambda = cfg.bar_lambda;
  settings.selection.tilde_lambda = cfg.tilde_lambda;

  const CrossFitResult result = cross_fit_average(ingested.data, settings, cfg.seed);
  const Vector pred = predict(result, ingested.data.X) * ingested.cate_unscale_factor();

  const std::filesystem::path out = prepare_out_dir(args.out_dir);
  write_text_file((out / "selected.csv").string(), selected_csv(result));
  write_text_file((out / "proxy_risks.csv").string(), proxy_risks_csv(result));
  write_text_file((out / "predictions.csv").string(), predictions_csv(pred));

  std::printf("%zu of 3 rotations succeeded\n", result.selections.size());
  for (std::size_t i = 0; i < result.selections.size(); ++i) {
    const SelectionResult& sel = result.selections[i];
    std::printf("rotation %d selected %s (proxy risk %.6g)\n", result.rotation[i],
                sel.candidates[sel.chosen].label.c_str(), sel.proxy_risks[sel.chosen]);
  }
  for (int j = 0; j < 3; ++j)
    if (!result.rotation_errors[static_cast<std::size_t>(j)].empty())
      std::printf("rotation %d failed: %s\n", j,
                  result.rotation_errors[static_cast<std::size_t>(j)].c_str());
  std::printf("wrote selected.csv, proxy_risks.csv, predictions.csv under %s\n",
              out.c_str());
  return 0;
}

int cmd_rates(const CommonArgs& args) {
  RatesConfig cfg = parse_rates_config(load_json_file(args.config_path));
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;

  const RateSweepResult result = rate_sweep(cfg.scenario, cfg.sigma, cfg.method, cfg.n_list,
                                            cfg.reps, cfg.seed, cfg.test_points, cfg.threads);
  const std::filesystem::path out = prepare_out_dir(args.out_dir);
  write_text_file((out / "rates.csv").string(), rates_csv(result, cfg.reps));
  write_text_file((out / "rates.md").string(),
                  rates_markdown(result, cfg.theoretical_exponent, cfg.slope_lo, cfg.slope_hi));

  const bool inside = result.slope >= cfg.slope_lo && result.slope <= cfg.slope_hi;
  std::printf("fitted slope %.4f, theoretical exponent %.4f, band [%.4f, %.4f]: %s\n",
              result.slope, cfg.theoretical_exponent, cfg.slope_lo, cfg.slope_hi,
              inside ? "PASS" : "FAIL");
  std::printf("wrote %s and %s\n", (out / "rates.csv").c_str(), (out / "rates.md").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage kernel ridge regression for heterogeneous treatment effects"};
  app.require_subcommand(1);

  CommonArgs sim_args, fit_args, rates_args;
  std::string data_path;

  CLI::App* simulate = app.add_subcommand("simulate", "run synthetic replications");
  add_common(simulate, sim_args);
  CLI::App* fit = app.add_subcommand("fit", "cross-fit a CSV dataset");
  add_common(fit, fit_args);
  fit->add_option("--data", data_path, "input CSV file")->required();
  CLI::App* rates = app.add_subcommand("rates", "convergence sweep over sample sizes");
  add_common(rates, rates_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args, data_path);
    return cmd_rates(rates_args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
