#pragma once

// Damage identification: scenario datasets, the rivet localization network,
// per-kind severity networks and their evaluation.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "frfnet/mlp.hpp"
#include "frfnet/panel_model.hpp"
#include "frfnet/pca_reduce.hpp"
#include "frfnet/signal_lab.hpp"

namespace frfnet {

// ---------------------------------------------------------------- tasks

struct Task {
  enum class Type { localize, severity };
  Type type = Type::localize;
  DamageKind kind = DamageKind::healthy;  // severity tasks only

  static Task localize() { return {}; }
  static Task severity(DamageKind kind) { return {Type::severity, kind}; }
  bool operator==(const Task&) const = default;
};

/// "localize" or "severity:<crack|hole_expansion|added_mass>".
Task parse_task(const std::string& text);
std::string to_string(const Task& task);

// ---------------------------------------------------------------- encodings

/// 34-element indicator of the damaged rivets; all zeros for healthy.
Eigen::VectorXd encode_rivets(const DamageScenario& scenario);
/// Rivet indices whose entry is >= threshold, ascending.
std::vector<int> decode_rivets(const Eigen::VectorXd& indicator, double threshold = 0.5);
/// Severity target of a damaged scenario (mean over its rivets).
double scenario_severity(const DamageScenario& scenario);

struct RivetVector {
  Eigen::VectorXd scores;      // 34 network outputs
  std::vector<bool> binary;    // scores[i] >= threshold
  double threshold = 0.5;
  std::vector<int> ranked;     // rivet indices by descending score

  std::vector<int> flagged() const;
  std::vector<int> top(std::size_t k) const;
};

RivetVector make_rivet_vector(const Eigen::VectorXd& scores, double threshold);

struct SeverityEstimate {
  DamageKind kind = DamageKind::crack;
  double value = 0.0;  // mm, stiffness-loss fraction or kg; clamped at 0
  double raw = 0.0;    // de-standardized network output before clamping
  int rivet = -1;      // rivet the estimate is reported for, -1 if unknown
};

// ---------------------------------------------------------------- models

/// Per-component affine map to zero mean and unit variance; components with
/// zero spread keep unit scale.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& rows);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

struct TrainingInfo {
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  double alpha = 0.0;
  double l2_lambda = 0.0;
  int epochs = 0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  std::vector<EpochStats> history;
  std::vector<double> restart_validation_mse;  // every restart of the chosen lambda
  std::map<double, double> lambda_validation_mse;
};

/// A trained network bound to the fingerprint space it was trained on.
struct TaskModel {
  Task task;
  Mlp net;
  Standardizer input;
  double target_mean = 0.0;   // severity de-standardization
  double target_scale = 1.0;
  std::string basis_id;
  TrainingInfo info;
};

RivetVector localize(const FeatureVector& feature, const TaskModel& model, double threshold = 0.5);
SeverityEstimate estimate_severity(const FeatureVector& feature, const TaskModel& model, DamageKind kind,
                                   int rivet = -1);

// ---------------------------------------------------------------- datasets

enum class Split { train, validation, test };
const char* to_string(Split split);
Split split_from_string(const std::string& name);

struct ScenarioGrid {
  std::vector<double> crack_lengths;   // mm
  std::vector<double> hole_fractions;  // stiffness-loss fraction
  std::vector<double> added_masses;    // kg
  int healthy_replicates = 0;
};

/// 10 crack lengths evenly spaced over 2.25..22.5 mm, hole expansion 0.1..0.5
/// and added mass 0.01..0.05 kg in 5 steps each, 30 healthy replicates.
ScenarioGrid default_scenario_grid();

/// Healthy replicates first, then every rivet for every crack length, hole
/// expansion and added mass.
std::vector<DamageScenario> build_scenarios(const ScenarioGrid& grid);

struct SplitFractions {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;
  void validate() const;
};

/// Seeded random assignment with counts round(train n), round(validation n)
/// and the remainder for test.
std::vector<Split> assign_splits(std::size_t n, const SplitFractions& fractions, std::uint64_t seed);

struct ScenarioRecord {
  int id = 0;
  DamageScenario scenario;
  Split split = Split::train;
  std::uint64_t seed = 0;  // measurement seed
};

struct SimulationParams {
  FrequencyGrid grid;
  ExcitationParams excitation;
};

struct PcaParams {
  int accel_components = 7;
  int strain_components = 4;
  FeatureOptions features;
};

/// Seeds and splits for a scenario list under one master seed.
std::vector<ScenarioRecord> make_records(const std::vector<DamageScenario>& scenarios, const SplitFractions& fractions,
                                         std::uint64_t master_seed);

/// Measured (noisy, averaged) FRF of one scenario.
FrfMatrix synthesize_frf(const PanelModel& panel, const ScenarioRecord& record, const SimulationParams& params);
std::vector<FrfMatrix> synthesize_frfs(const PanelModel& panel, const std::vector<ScenarioRecord>& records,
                                       const SimulationParams& params);

struct BasisPair {
  PcaBasis accel;
  PcaBasis strain;
  std::string id() const { return fingerprint_space_id(accel, strain); }
};

/// Fits both bases on the training-split FRFs only.
BasisPair fit_bases(const std::vector<FrfMatrix>& frfs, const std::vector<ScenarioRecord>& records,
                    const PcaParams& params);

/// Fingerprints of every FRF, one row each.
Eigen::MatrixXd fingerprint_matrix(const std::vector<FrfMatrix>& frfs, const BasisPair& bases);

struct Dataset {
  std::vector<ScenarioRecord> records;
  Eigen::MatrixXd features;  // rows follow records
  std::string basis_id;
  std::vector<std::string> warnings;

  std::vector<int> rows(Split split) const;
  std::vector<int> rows(Split split, DamageKind kind) const;
  FeatureVector feature(int row) const;
};

struct BuiltDataset {
  Dataset data;
  BasisPair bases;
  std::vector<FrfMatrix> frfs;
};

BuiltDataset build_dataset(const PanelModel& panel, const std::vector<DamageScenario>& scenarios,
                           const SimulationParams& simulation, const PcaParams& pca, const SplitFractions& fractions,
                           std::uint64_t master_seed);

/// Raw fingerprints and 34-bit targets of one split.
TrainingSet<double> localization_set(const Dataset& data, Split split);
/// Raw fingerprints and severities of the damaged scenarios of one kind.
TrainingSet<double> severity_set(const Dataset& data, Split split, DamageKind kind);

// ---------------------------------------------------------------- training

struct NetworkParams {
  int hidden_units = 30;
  double alpha = 0.05;
  int max_epochs = 400;
  double target_mse = 0.0;
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2};
  int restarts = 3;
};

NetworkParams default_network_params(const Task& task);

/// Trains one network for a fixed lambda. Inputs are standardized with the
/// training statistics; severity targets are standardized as well.
TaskModel train_task(const Task& task, const TrainingSet<double>& train, const TrainingSet<double>& validation,
                     const NetworkParams& params, double l2_lambda, const std::string& basis_id,
                     std::uint64_t master_seed, int restart);

/// Validation MSE of a model on raw data, in the model's target space.
double validation_mse(const TaskModel& model, const TrainingSet<double>& data);

struct EnsembleResult {
  TaskModel best;
  std::vector<double> restart_mse;
  int best_restart = 0;
};

/// n_restarts trainings with distinct init seeds, best by validation MSE.
EnsembleResult ensemble_retrain(const Task& task, const TrainingSet<double>& train,
                                const TrainingSet<double>& validation, const NetworkParams& params, double l2_lambda,
                                const std::string& basis_id, std::uint64_t master_seed, int n_restarts);

/// Lambda chosen on the validation split, then an ensemble at that lambda.
TaskModel fit_task(const Task& task, const Dataset& data, const NetworkParams& params, std::uint64_t master_seed);

// ---------------------------------------------------------------- evaluation

struct DamageIdSystem {
  TaskModel localizer;
  std::map<DamageKind, TaskModel> severity;
  std::vector<std::vector<int>> neighbours;  // rivets adjacent along a stiffener
  double threshold = 0.5;
};

std::vector<std::vector<int>> rivet_neighbours(const PanelModel& panel);

struct ScenarioResult {
  int id = 0;
  DamageScenario scenario;
  RivetVector location;
  int wrong_bits = 0;
  bool hit = false;
  std::optional<SeverityEstimate> severity;  // damaged scenarios with a trained kind
};

struct EvaluationReport {
  double threshold = 0.5;
  double misclassification_pct = 0.0;
  double localization_hit_rate = 0.0;
  std::map<DamageKind, double> severity_mean_rel_err_pct;
  std::map<DamageKind, int> severity_count;
  std::vector<ScenarioResult> records;
};

/// Every true rivet flagged itself or through a flagged neighbour; a healthy
/// scenario is a hit when nothing is flagged.
bool localization_hit(const DamageScenario& scenario, const RivetVector& location,
                      const std::vector<std::vector<int>>& neighbours);

ScenarioResult evaluate_scenario(const DamageIdSystem& system, const ScenarioRecord& record,
                                 const FeatureVector& feature);
/// Aggregate metrics recomputed from per-scenario records.
EvaluationReport summarize(std::vector<ScenarioResult> records, double threshold);
EvaluationReport evaluate(const DamageIdSystem& system, const Dataset& data, Split split = Split::test);

}  // namespace frfnet
