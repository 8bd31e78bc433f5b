#pragma once

// Batch pipeline: run configuration, the command implementations behind the
// CLI and the report writers. Every command reads and writes container files
// in the run's output directory, so each stage can be re-run on its own.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "frfnet/damage_id.hpp"
#include "frfnet/persistence.hpp"

namespace frfnet {

struct RunConfig {
  std::string source = "<defaults>";
  std::string panel_config_path;  // resolved path; empty selects the built-in panel
  PanelConfig panel;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  SimulationParams simulation;
  PcaParams pca;
  ScenarioGrid grid;
  SplitFractions split;
  NetworkParams localize;
  NetworkParams severity;
  double threshold = 0.5;
  // severity spot check: crack lengths swept at one rivet, first entry 0 mm
  std::vector<double> sweep_lengths{0.0, 4.0, 8.0, 12.0, 16.0, 20.0};
  int sweep_rivet = 7;

  nlohmann::json to_json() const;
};

/// Built-in defaults with master seed 20240101.
RunConfig default_run_config();
/// `panel_config` paths are resolved against `base_dir`. The master seed is
/// mandatory.
RunConfig parse_run_config(const std::string& text, const std::string& origin, const std::string& base_dir);
RunConfig load_run_config(const std::string& path);

/// File names inside an output directory.
struct Artifacts {
  std::string dir;

  std::string path(const std::string& name) const;
  std::string dataset() const { return path("dataset.frfd"); }
  std::string basis(ChannelKind block) const;
  std::string fingerprints() const { return path("fingerprints.frfd"); }
  std::string model(const Task& task) const;
  std::string history(const Task& task) const;
  std::string evaluation_text() const { return path("evaluation.txt"); }
  std::string evaluation_json() const { return path("evaluation.json"); }
  std::string records_csv() const { return path("records.csv"); }
  std::string summary_text() const { return path("summary.txt"); }
  std::string summary_json() const { return path("summary.json"); }
  std::string log() const { return path("run.log"); }
};

/// Progress messages (optional stream) and the timestamped sidecar log.
class RunLog {
 public:
  RunLog(std::string sidecar_path, std::ostream* verbose);
  void info(const std::string& message) const;
  /// Appends "<UTC timestamp> <event>" to the sidecar.
  void stamp(const std::string& event) const;

 private:
  std::string sidecar_;
  std::ostream* verbose_;
};

std::vector<Task> all_tasks();

void cmd_simulate(const RunConfig& config, const RunLog& log);
void cmd_fit_pca(const RunConfig& config, const RunLog& log);
TaskModel cmd_train(const RunConfig& config, const Task& task, const RunLog& log);

struct InferenceResult {
  Task task;
  int scenario = -1;  // dataset index when read from a dataset container
  std::optional<RivetVector> location;
  std::optional<SeverityEstimate> severity;
};

/// Applies a stored model to one FRF. `frf_path` holds an frf_matrix, or an
/// frf_dataset together with `scenario`. The PCA bases are read from the
/// model's directory and must match the model's basis id.
InferenceResult cmd_infer(const std::string& model_path, const std::string& frf_path, double threshold,
                          std::optional<int> scenario = std::nullopt);
std::string format_inference(const InferenceResult& result);

EvaluationReport cmd_evaluate(const RunConfig& config, const RunLog& log);

struct ReproduceSummary {
  EvaluationReport report;
  std::string basis_id;
  Eigen::Index fingerprint_length = 0;
  std::vector<double> accel_variance;  // per accelerance channel, first n_keep PCs
  double localize_validation_mse = 0.0;
  std::vector<double> localize_restart_mse;
  std::vector<double> sweep_lengths;
  std::vector<double> sweep_predictions;
  int sweep_non_decreasing = 0;
};

ReproduceSummary cmd_reproduce(const RunConfig& config, const RunLog& log);

/// Crack-network predictions for a crack-length sweep at `rivet`, measured
/// with fresh seeds outside the dataset.
std::vector<double> crack_sweep(const RunConfig& config, const BasisPair& bases, const TaskModel& crack_model);
int non_decreasing_steps(const std::vector<double>& values);

std::string format_report(const EvaluationReport& report);
nlohmann::json report_json(const EvaluationReport& report);
std::string records_csv(const EvaluationReport& report);
std::string history_csv(const TrainingInfo& info);
std::string format_summary(const ReproduceSummary& summary);
nlohmann::json summary_json(const ReproduceSummary& summary);

}  // namespace frfnet
