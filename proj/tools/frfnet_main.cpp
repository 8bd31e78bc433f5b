#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "frfnet/errors.hpp"
#include "frfnet/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfigError = 2, kDataError = 3, kContractError = 4 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> threshold;
  std::string task = "all";
  std::string model;
  std::string frf;
  std::optional<int> scenario;
  bool verbose = false;
};

frfnet::RunConfig resolve(const Options& o) {
  frfnet::RunConfig c = frfnet::load_run_config(o.config);
  if (o.seed) c.master_seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.threshold) {
    if (!(*o.threshold > 0 && *o.threshold < 1)) throw frfnet::ConfigError("--threshold must lie in (0, 1)");
    c.threshold = *o.threshold;
  }
  return c;
}

int run(const std::string& command, const Options& o) {
  if (command == "infer") {
    const auto r = frfnet::cmd_infer(o.model, o.frf, o.threshold.value_or(0.5), o.scenario);
    std::cout << frfnet::format_inference(r);
    return kOk;
  }
  const frfnet::RunConfig config = resolve(o);
  const frfnet::RunLog log(frfnet::Artifacts{config.output_dir}.log(), o.verbose ? &std::cerr : nullptr);
  if (command == "simulate") {
    frfnet::cmd_simulate(config, log);
  } else if (command == "fit-pca") {
    frfnet::cmd_fit_pca(config, log);
  } else if (command == "train") {
    if (o.task == "all")
      for (const auto& t : frfnet::all_tasks()) frfnet::cmd_train(config, t, log);
    else
      frfnet::cmd_train(config, frfnet::parse_task(o.task), log);
  } else if (command == "evaluate") {
    std::cout << frfnet::format_report(frfnet::cmd_evaluate(config, log));
  } else if (command == "reproduce") {
    std::cout << frfnet::format_summary(frfnet::cmd_reproduce(config, log));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vibration FRF damage identification pipeline"};
  app.require_subcommand(1);
  Options o;

  const auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the master seed");
    sub->add_option("--out", o.out, "Override the output directory");
    sub->add_flag("--verbose", o.verbose, "Progress messages on stderr");
  };
  add_run_options(app.add_subcommand("simulate", "Synthesize the measured FRF dataset"));
  add_run_options(app.add_subcommand("fit-pca", "Fit PCA bases on the training split and write fingerprints"));
  auto* train = app.add_subcommand("train", "Train task networks");
  add_run_options(train);
  train->add_option("--task", o.task, "localize, severity:<crack|hole_expansion|added_mass> or all");
  auto* infer = app.add_subcommand("infer", "Apply a stored model to one FRF");
  infer->add_option("--model", o.model, "Model container")->required();
  infer->add_option("--frf", o.frf, "frf_matrix or frf_dataset container")->required();
  infer->add_option("--scenario", o.scenario, "Scenario index inside a dataset container");
  infer->add_option("--threshold", o.threshold, "Localization threshold");
  infer->add_flag("--verbose", o.verbose, "Unused; accepted for symmetry");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate the trained system on the test split");
  add_run_options(evaluate);
  evaluate->add_option("--threshold", o.threshold, "Localization threshold");
  auto* reproduce = app.add_subcommand("reproduce", "Run the full pipeline and write a summary");
  add_run_options(reproduce);
  reproduce->add_option("--threshold", o.threshold, "Localization threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const frfnet::ConfigError& e) {
    std::cerr << command << ": configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const frfnet::DataError& e) {
    std::cerr << command << ": data error: " << e.what() << "\n";
    return kDataError;
  } catch (const frfnet::ContractError& e) {
    std::cerr << command << ": contract violation: " << e.what() << "\n";
    return kContractError;
  } catch (const std::exception& e) {
    std::cerr << command << ": internal error: " << e.what() << "\n";
    return kInternal;
  }
}
