#include "frfnet/damage_id.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "frfnet/errors.hpp"
#include "frfnet/seeds.hpp"

namespace frfnet {

namespace {

std::uint64_t task_code(const Task& task) {
  return task.type == Task::Type::localize ? 0 : static_cast<std::uint64_t>(task.kind);
}

}  // namespace

// ---------------------------------------------------------------- tasks

Task parse_task(const std::string& text) {
  if (text == "localize") return Task::localize();
  const std::string prefix = "severity:";
  if (text.rfind(prefix, 0) == 0) {
    const DamageKind kind = damage_kind_from_string(text.substr(prefix.size()));
    if (kind == DamageKind::healthy) throw ConfigError("task: no severity network for healthy scenarios");
    return Task::severity(kind);
  }
  throw ConfigError("task must be 'localize' or 'severity:<kind>', got '" + text + "'");
}

std::string to_string(const Task& task) {
  return task.type == Task::Type::localize ? "localize" : std::string("severity:") + to_string(task.kind);
}

// ---------------------------------------------------------------- encodings

Eigen::VectorXd encode_rivets(const DamageScenario& scenario) {
  scenario.validate();
  Eigen::VectorXd bits = Eigen::VectorXd::Zero(kRivetCount);
  for (int r : scenario.rivets) bits(r) = 1.0;
  return bits;
}

std::vector<int> decode_rivets(const Eigen::VectorXd& indicator, double threshold) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < indicator.size(); ++i)
    if (indicator(i) >= threshold) out.push_back(static_cast<int>(i));
  return out;
}

double scenario_severity(const DamageScenario& scenario) {
  if (scenario.severity.empty()) return 0.0;
  return std::accumulate(scenario.severity.begin(), scenario.severity.end(), 0.0) /
         static_cast<double>(scenario.severity.size());
}

std::vector<int> RivetVector::flagged() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < binary.size(); ++i)
    if (binary[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> RivetVector::top(std::size_t k) const {
  return {ranked.begin(), ranked.begin() + static_cast<long>(std::min(k, ranked.size()))};
}

RivetVector make_rivet_vector(const Eigen::VectorXd& scores, double threshold) {
  if (scores.size() != kRivetCount)
    throw ContractError("rivet vector must have 34 entries, got " + std::to_string(scores.size()));
  RivetVector v;
  v.scores = scores;
  v.threshold = threshold;
  v.binary.resize(kRivetCount);
  for (int i = 0; i < kRivetCount; ++i) v.binary[static_cast<std::size_t>(i)] = scores(i) >= threshold;
  v.ranked.resize(kRivetCount);
  std::iota(v.ranked.begin(), v.ranked.end(), 0);
  std::stable_sort(v.ranked.begin(), v.ranked.end(), [&](int a, int b) { return scores(a) > scores(b); });
  return v;
}

// ---------------------------------------------------------------- models

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  require(rows.rows() >= 1, "standardizer: no data");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - s.mean.transpose();
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(rows.rows())).cwiseSqrt().transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale(i) > 0)) s.scale(i) = 1.0;
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size())
    throw ContractError("standardizer: input has " + std::to_string(x.size()) + " entries, expected " +
                        std::to_string(mean.size()));
  return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& rows) const {
  require(rows.cols() == mean.size(), "standardizer: column count mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

namespace {

void check_basis(const FeatureVector& feature, const TaskModel& model) {
  if (feature.basis_id != model.basis_id)
    throw ContractError("fingerprint basis '" + feature.basis_id + "' does not match the model's basis '" +
                        model.basis_id + "'");
}

}  // namespace

RivetVector localize(const FeatureVector& feature, const TaskModel& model, double threshold) {
  if (model.task.type != Task::Type::localize) throw ContractError("localize: model was trained for " + to_string(model.task));
  check_basis(feature, model);
  if (model.net.output_size() != kRivetCount) throw ContractError("localize: network output size is not 34");
  return make_rivet_vector(predict(model.net, model.input.apply(feature.values)), threshold);
}

SeverityEstimate estimate_severity(const FeatureVector& feature, const TaskModel& model, DamageKind kind, int rivet) {
  if (model.task != Task::severity(kind))
    throw ContractError(std::string("estimate_severity: model was trained for ") + to_string(model.task) +
                        ", requested " + to_string(kind));
  check_basis(feature, model);
  const Eigen::VectorXd y = predict(model.net, model.input.apply(feature.values));
  SeverityEstimate e;
  e.kind = kind;
  e.raw = model.target_mean + model.target_scale * y(0);
  e.value = std::max(e.raw, 0.0);
  e.rivet = rivet;
  return e;
}

// ---------------------------------------------------------------- datasets

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  throw DataError("unknown split '" + name + "'");
}

ScenarioGrid default_scenario_grid() {
  ScenarioGrid g;
  g.crack_lengths = {2.25, 4.5, 6.75, 9.0, 11.25, 13.5, 15.75, 18.0, 20.25, 22.5};
  g.hole_fractions = {0.1, 0.2, 0.3, 0.4, 0.5};
  g.added_masses = {0.01, 0.02, 0.03, 0.04, 0.05};
  g.healthy_replicates = 30;
  return g;
}

std::vector<DamageScenario> build_scenarios(const ScenarioGrid& grid) {
  std::vector<DamageScenario> out;
  for (int i = 0; i < grid.healthy_replicates; ++i) out.push_back(DamageScenario::healthy());
  const auto add = [&](DamageKind kind, const std::vector<double>& levels) {
    for (double s : levels)
      for (int r = 0; r < kRivetCount; ++r) out.push_back(DamageScenario::single(kind, r, s));
  };
  add(DamageKind::crack, grid.crack_lengths);
  add(DamageKind::hole_expansion, grid.hole_fractions);
  add(DamageKind::added_mass, grid.added_masses);
  for (const auto& s : out) s.validate();
  return out;
}

void SplitFractions::validate() const {
  if (train <= 0 || validation < 0 || test < 0 || std::abs(train + validation + test - 1.0) > 1e-9)
    throw ConfigError("split fractions must be non-negative, with train > 0, and sum to 1");
}

std::vector<Split> assign_splits(std::size_t n, const SplitFractions& fractions, std::uint64_t seed) {
  fractions.validate();
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions.validation * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Split> out(n, Split::test);
  for (std::size_t i = 0; i < n; ++i)
    out[order[i]] = i < n_train ? Split::train : i < n_train + n_val ? Split::validation : Split::test;
  return out;
}

std::vector<ScenarioRecord> make_records(const std::vector<DamageScenario>& scenarios, const SplitFractions& fractions,
                                         std::uint64_t master_seed) {
  const std::vector<Split> splits = assign_splits(scenarios.size(), fractions, derive_seed(master_seed, SeedStage::split, 0));
  std::vector<ScenarioRecord> out;
  out.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i)
    out.push_back({static_cast<int>(i), scenarios[i], splits[i], derive_seed(master_seed, SeedStage::measurement, i)});
  return out;
}

FrfMatrix synthesize_frf(const PanelModel& panel, const ScenarioRecord& record, const SimulationParams& params) {
  const PanelModel damaged = apply_damage(panel, record.scenario);
  const ModalBasis basis = modal_solve(damaged, damaged.n_modes);
  const FrfMatrix exact = analytic_frf(basis, damaged.sensors, params.grid);
  return measure_frf(exact, params.excitation, record.seed);
}

std::vector<FrfMatrix> synthesize_frfs(const PanelModel& panel, const std::vector<ScenarioRecord>& records,
                                       const SimulationParams& params) {
  std::vector<FrfMatrix> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(synthesize_frf(panel, r, params));
  return out;
}

BasisPair fit_bases(const std::vector<FrfMatrix>& frfs, const std::vector<ScenarioRecord>& records,
                    const PcaParams& params) {
  if (frfs.size() != records.size()) throw ContractError("fit_bases: FRF and record counts differ");
  std::vector<FrfMatrix> training;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == Split::train) training.push_back(frfs[i]);
  BasisPair b;
  b.accel = fit_basis(training, ChannelKind::accelerance, params.accel_components, params.features);
  b.strain = fit_basis(training, ChannelKind::strain, params.strain_components, params.features);
  return b;
}

Eigen::MatrixXd fingerprint_matrix(const std::vector<FrfMatrix>& frfs, const BasisPair& bases) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(frfs.size()), bases.accel.output_size() + bases.strain.output_size());
  for (std::size_t i = 0; i < frfs.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = project(frfs[i], bases.accel, bases.strain).values.transpose();
  return out;
}

std::vector<int> Dataset::rows(Split split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Dataset::rows(Split split, DamageKind kind) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split && records[i].scenario.kind == kind) out.push_back(static_cast<int>(i));
  return out;
}

FeatureVector Dataset::feature(int row) const {
  require(row >= 0 && row < features.rows(), "dataset: row out of range");
  return {features.row(row).transpose(), basis_id};
}

BuiltDataset build_dataset(const PanelModel& panel, const std::vector<DamageScenario>& scenarios,
                           const SimulationParams& simulation, const PcaParams& pca, const SplitFractions& fractions,
                           std::uint64_t master_seed) {
  BuiltDataset out;
  out.data.records = make_records(scenarios, fractions, master_seed);
  out.frfs = synthesize_frfs(panel, out.data.records, simulation);
  out.bases = fit_bases(out.frfs, out.data.records, pca);
  out.data.features = fingerprint_matrix(out.frfs, out.bases);
  out.data.basis_id = out.bases.id();
  if (std::none_of(scenarios.begin(), scenarios.end(), [](const auto& s) { return s.kind == DamageKind::healthy; }))
    out.data.warnings.push_back("scenario list contains no healthy case");
  return out;
}

TrainingSet<double> localization_set(const Dataset& data, Split split) {
  const std::vector<int> rows = data.rows(split);
  TrainingSet<double> set;
  set.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  set.targets.resize(static_cast<Eigen::Index>(rows.size()), kRivetCount);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    set.inputs.row(r) = data.features.row(rows[i]);
    set.targets.row(r) = encode_rivets(data.records[static_cast<std::size_t>(rows[i])].scenario).transpose();
  }
  return set;
}

TrainingSet<double> severity_set(const Dataset& data, Split split, DamageKind kind) {
  require(kind != DamageKind::healthy, "severity_set: healthy has no severity");
  const std::vector<int> rows = data.rows(split, kind);
  TrainingSet<double> set;
  set.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  set.targets.resize(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    set.inputs.row(r) = data.features.row(rows[i]);
    set.targets(r, 0) = scenario_severity(data.records[static_cast<std::size_t>(rows[i])].scenario);
  }
  return set;
}

// ---------------------------------------------------------------- training

NetworkParams default_network_params(const Task& task) {
  NetworkParams p;
  if (task.type == Task::Type::severity) {
    p.alpha = 0.01;
    p.max_epochs = 400;
  }
  return p;
}

namespace {

TrainingSet<double> model_space(const TaskModel& model, const TrainingSet<double>& raw) {
  TrainingSet<double> out;
  out.inputs = model.input.apply_rows(raw.inputs);
  out.targets = (raw.targets.array() - model.target_mean) / model.target_scale;
  return out;
}

}  // namespace

double validation_mse(const TaskModel& model, const TrainingSet<double>& data) {
  if (data.size() == 0) return 0.0;
  return mean_squared_error(model.net, model_space(model, data));
}

TaskModel train_task(const Task& task, const TrainingSet<double>& train, const TrainingSet<double>& validation,
                     const NetworkParams& params, double l2_lambda, const std::string& basis_id,
                     std::uint64_t master_seed, int restart) {
  train.validate();
  require(params.hidden_units >= 1, "train_task: hidden_units must be positive");
  const Eigen::Index n_out = task.type == Task::Type::localize ? kRivetCount : 1;
  require(train.targets.cols() == n_out, "train_task: target width does not match the task");

  TaskModel model;
  model.task = task;
  model.basis_id = basis_id;
  model.input = Standardizer::fit(train.inputs);
  if (task.type == Task::Type::severity) {
    const Standardizer t = Standardizer::fit(train.targets);
    model.target_mean = t.mean(0);
    model.target_scale = t.scale(0);
  }

  const std::uint64_t counter = task_code(task) * 1000 + static_cast<std::uint64_t>(restart);
  TrainParams tp;
  tp.alpha = params.alpha;
  tp.max_epochs = params.max_epochs;
  tp.target_mse = params.target_mse;
  tp.l2_lambda = l2_lambda;
  tp.init_seed = derive_seed(master_seed, SeedStage::init, counter);
  tp.shuffle_seed = derive_seed(master_seed, SeedStage::shuffle, counter);

  const Activation out_act = task.type == Task::Type::localize ? Activation::sigmoid : Activation::linear;
  Mlp net = make_network<double>({train.inputs.cols(), params.hidden_units, n_out}, {Activation::sigmoid, out_act},
                                 tp.init_seed, tp.init_scale);
  TrainResult<double> result = train_regularized(std::move(net), model_space(model, train), tp);
  model.net = std::move(result.net);

  TrainingInfo& info = model.info;
  info.init_seed = tp.init_seed;
  info.shuffle_seed = tp.shuffle_seed;
  info.alpha = tp.alpha;
  info.l2_lambda = l2_lambda;
  info.epochs = static_cast<int>(result.history.size());
  info.train_mse = result.history.back().mse;
  info.history = std::move(result.history);
  info.validation_mse = validation_mse(model, validation);
  return model;
}

EnsembleResult ensemble_retrain(const Task& task, const TrainingSet<double>& train,
                                const TrainingSet<double>& validation, const NetworkParams& params, double l2_lambda,
                                const std::string& basis_id, std::uint64_t master_seed, int n_restarts) {
  if (n_restarts < 1) throw ContractError("ensemble_retrain: n_restarts must be at least 1");
  EnsembleResult out;
  for (int r = 0; r < n_restarts; ++r) {
    TaskModel m = train_task(task, train, validation, params, l2_lambda, basis_id, master_seed, r);
    out.restart_mse.push_back(m.info.validation_mse);
    if (r == 0 || m.info.validation_mse < out.best.info.validation_mse) {
      out.best = std::move(m);
      out.best_restart = r;
    }
  }
  out.best.info.restart_validation_mse = out.restart_mse;
  return out;
}

TaskModel fit_task(const Task& task, const Dataset& data, const NetworkParams& params, std::uint64_t master_seed) {
  require(!params.lambda_grid.empty(), "fit_task: empty lambda grid");
  require(params.restarts >= 1, "fit_task: restarts must be at least 1");
  const bool loc = task.type == Task::Type::localize;
  const TrainingSet<double> train = loc ? localization_set(data, Split::train) : severity_set(data, Split::train, task.kind);
  const TrainingSet<double> val =
      loc ? localization_set(data, Split::validation) : severity_set(data, Split::validation, task.kind);
  if (train.size() < 2) throw DataError("fit_task: too few training scenarios for " + to_string(task));

  // lambda on restart 0, then the remaining restarts at the chosen lambda
  std::map<double, double> lambda_mse;
  std::optional<TaskModel> best;
  for (double lambda : params.lambda_grid) {
    TaskModel m = train_task(task, train, val, params, lambda, data.basis_id, master_seed, 0);
    lambda_mse[lambda] = m.info.validation_mse;
    if (!best || m.info.validation_mse < best->info.validation_mse) best = std::move(m);
  }
  std::vector<double> restart_mse{best->info.validation_mse};
  for (int r = 1; r < params.restarts; ++r) {
    TaskModel m = train_task(task, train, val, params, best->info.l2_lambda, data.basis_id, master_seed, r);
    restart_mse.push_back(m.info.validation_mse);
    if (m.info.validation_mse < best->info.validation_mse) best = std::move(m);
  }
  best->info.restart_validation_mse = restart_mse;
  best->info.lambda_validation_mse = lambda_mse;
  return *best;
}

// ---------------------------------------------------------------- evaluation

std::vector<std::vector<int>> rivet_neighbours(const PanelModel& panel) {
  std::vector<std::vector<int>> out(kRivetCount);
  for (int a = 0; a < kRivetCount; ++a)
    for (int b = 0; b < kRivetCount; ++b)
      if (a != b && panel.rivets_adjacent(a, b)) out[static_cast<std::size_t>(a)].push_back(b);
  return out;
}

bool localization_hit(const DamageScenario& scenario, const RivetVector& location,
                      const std::vector<std::vector<int>>& neighbours) {
  if (scenario.rivets.empty()) return location.flagged().empty();
  for (int r : scenario.rivets) {
    bool found = location.binary[static_cast<std::size_t>(r)];
    if (static_cast<std::size_t>(r) < neighbours.size())
      for (int n : neighbours[static_cast<std::size_t>(r)]) found = found || location.binary[static_cast<std::size_t>(n)];
    if (!found) return false;
  }
  return true;
}

ScenarioResult evaluate_scenario(const DamageIdSystem& system, const ScenarioRecord& record,
                                 const FeatureVector& feature) {
  ScenarioResult out;
  out.id = record.id;
  out.scenario = record.scenario;
  out.location = localize(feature, system.localizer, system.threshold);
  const Eigen::VectorXd truth = encode_rivets(record.scenario);
  for (int i = 0; i < kRivetCount; ++i)
    if (out.location.binary[static_cast<std::size_t>(i)] != (truth(i) >= 0.5)) ++out.wrong_bits;
  out.hit = localization_hit(record.scenario, out.location, system.neighbours);
  const auto it = system.severity.find(record.scenario.kind);
  if (record.scenario.kind != DamageKind::healthy && it != system.severity.end())
    out.severity = estimate_severity(feature, it->second, record.scenario.kind, out.location.ranked.front());
  return out;
}

EvaluationReport summarize(std::vector<ScenarioResult> records, double threshold) {
  if (records.empty()) throw ContractError("evaluate: no scenarios to evaluate");
  EvaluationReport rep;
  rep.threshold = threshold;
  long wrong = 0;
  int hits = 0;
  std::map<DamageKind, double> err_sum;
  for (const auto& r : records) {
    wrong += r.wrong_bits;
    hits += r.hit ? 1 : 0;
    if (r.severity) {
      const double truth = scenario_severity(r.scenario);
      err_sum[r.scenario.kind] += std::abs(r.severity->value - truth) / truth;
      ++rep.severity_count[r.scenario.kind];
    }
  }
  const double n = static_cast<double>(records.size());
  rep.misclassification_pct = 100.0 * static_cast<double>(wrong) / (kRivetCount * n);
  rep.localization_hit_rate = hits / n;
  for (const auto& [kind, sum] : err_sum) rep.severity_mean_rel_err_pct[kind] = 100.0 * sum / rep.severity_count[kind];
  rep.records = std::move(records);
  return rep;
}

EvaluationReport evaluate(const DamageIdSystem& system, const Dataset& data, Split split) {
  std::vector<ScenarioResult> results;
  for (int row : data.rows(split))
    results.push_back(evaluate_scenario(system, data.records[static_cast<std::size_t>(row)], data.feature(row)));
  return summarize(std::move(results), system.threshold);
}

}  // namespace frfnet
