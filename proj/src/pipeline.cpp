#include "frfnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "frfnet/config.hpp"
#include "frfnet/errors.hpp"
#include "frfnet/seeds.hpp"

namespace frfnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string strf(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof buffer, format, args);
  va_end(args);
  return buffer;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::string kind_file_name(DamageKind kind) { return to_string(kind); }

constexpr DamageKind kSeverityKinds[] = {DamageKind::crack, DamageKind::hole_expansion, DamageKind::added_mass};

void check_positive(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("run config: " + what);
}

void validate(const RunConfig& c) {
  c.simulation.grid.validate();
  check_positive(c.simulation.excitation.n_records >= 1, "n_records must be at least 1");
  check_positive(c.simulation.excitation.sigma > 0, "sigma must be positive");
  check_positive(c.pca.accel_components >= 1 && c.pca.strain_components >= 1, "component counts must be positive");
  check_positive(c.grid.healthy_replicates >= 0, "healthy_replicates must be non-negative");
  c.split.validate();
  for (const NetworkParams* p : {&c.localize, &c.severity}) {
    check_positive(p->hidden_units >= 1, "hidden_units must be positive");
    check_positive(p->alpha > 0, "learning rates must be positive");
    check_positive(p->max_epochs >= 1, "epoch counts must be at least 1");
    check_positive(p->restarts >= 1, "restarts must be at least 1");
    check_positive(!p->lambda_grid.empty(), "lambda_grid must not be empty");
    for (double l : p->lambda_grid) check_positive(l >= 0, "lambda_grid entries must be non-negative");
  }
  check_positive(c.threshold > 0 && c.threshold < 1, "threshold must lie in (0, 1)");
  check_positive(c.sweep_rivet >= 0 && c.sweep_rivet < kRivetCount, "sweep_rivet must lie in [0, 34)");
  for (double l : c.sweep_lengths)
    check_positive(l >= 0 && l < kCrackReferenceLengthMm, "sweep_lengths must lie in [0, 25) mm");
}

}  // namespace

// ---------------------------------------------------------------- config

json RunConfig::to_json() const {
  const auto& ex = simulation.excitation;
  return json{{"panel", format_panel_config(panel)},
              {"master_seed", master_seed},
              {"n_bins", simulation.grid.n_bins},
              {"f_max", simulation.grid.f_max},
              {"snr_db", ex.snr_db ? json(*ex.snr_db) : json("none")},
              {"n_records", ex.n_records},
              {"sigma", ex.sigma},
              {"accel_components", pca.accel_components},
              {"strain_components", pca.strain_components},
              {"floor_decades", pca.features.floor_decades},
              {"crack_lengths", grid.crack_lengths},
              {"hole_fractions", grid.hole_fractions},
              {"added_masses", grid.added_masses},
              {"healthy_replicates", grid.healthy_replicates},
              {"split", {split.train, split.validation, split.test}}};
}

RunConfig default_run_config() {
  RunConfig c;
  c.panel = default_panel_config();
  c.master_seed = 20240101;
  c.grid = default_scenario_grid();
  c.localize = default_network_params(Task::localize());
  c.localize.max_epochs = 800;
  c.severity = default_network_params(Task::severity(DamageKind::crack));
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin, const std::string& base_dir) {
  const KeyValueFile kv = KeyValueFile::parse(text, origin);
  kv.reject_unknown({"panel_config", "master_seed", "output_dir", "n_bins", "f_max", "snr_db", "n_records", "sigma",
                     "accel_components", "strain_components", "floor_decades", "crack_lengths", "hole_fractions",
                     "added_masses", "healthy_replicates", "split", "hidden_units", "localize_alpha",
                     "localize_epochs", "severity_alpha", "severity_epochs", "target_mse", "lambda_grid", "restarts",
                     "threshold", "sweep_lengths", "sweep_rivet"});
  RunConfig c = default_run_config();
  c.source = origin;
  if (!kv.has("master_seed")) throw ConfigError(origin + ": master_seed is required");
  c.master_seed = kv.unsigned_integer("master_seed");
  if (kv.has("panel_config")) {
    fs::path p = kv.text("panel_config");
    if (p.is_relative()) p = fs::path(base_dir) / p;
    c.panel_config_path = p.lexically_normal().string();
    c.panel = load_panel_config(c.panel_config_path);
  }
  if (kv.has("output_dir")) {
    fs::path p = kv.text("output_dir");
    if (p.is_relative()) p = fs::path(base_dir) / p;
    c.output_dir = p.lexically_normal().string();
  }
  auto& sim = c.simulation;
  if (kv.has("n_bins")) sim.grid.n_bins = kv.integer("n_bins");
  if (kv.has("f_max")) sim.grid.f_max = kv.number("f_max");
  if (kv.has("snr_db")) {
    if (kv.text("snr_db") == "none") sim.excitation.snr_db.reset();
    else sim.excitation.snr_db = kv.number("snr_db");
  }
  if (kv.has("n_records")) sim.excitation.n_records = static_cast<int>(kv.integer("n_records"));
  if (kv.has("sigma")) sim.excitation.sigma = kv.number("sigma");
  if (kv.has("accel_components")) c.pca.accel_components = static_cast<int>(kv.integer("accel_components"));
  if (kv.has("strain_components")) c.pca.strain_components = static_cast<int>(kv.integer("strain_components"));
  if (kv.has("floor_decades")) c.pca.features.floor_decades = kv.number("floor_decades");
  if (kv.has("crack_lengths")) c.grid.crack_lengths = kv.numbers("crack_lengths");
  if (kv.has("hole_fractions")) c.grid.hole_fractions = kv.numbers("hole_fractions");
  if (kv.has("added_masses")) c.grid.added_masses = kv.numbers("added_masses");
  if (kv.has("healthy_replicates")) c.grid.healthy_replicates = static_cast<int>(kv.integer("healthy_replicates"));
  if (kv.has("split")) {
    const auto f = kv.numbers("split");
    if (f.size() != 3) throw ConfigError(origin + ": split takes three fractions (train validation test)");
    c.split = {f[0], f[1], f[2]};
  }
  for (NetworkParams* p : {&c.localize, &c.severity}) {
    if (kv.has("hidden_units")) p->hidden_units = static_cast<int>(kv.integer("hidden_units"));
    if (kv.has("target_mse")) p->target_mse = kv.number("target_mse");
    if (kv.has("lambda_grid")) p->lambda_grid = kv.numbers("lambda_grid");
    if (kv.has("restarts")) p->restarts = static_cast<int>(kv.integer("restarts"));
  }
  if (kv.has("localize_alpha")) c.localize.alpha = kv.number("localize_alpha");
  if (kv.has("localize_epochs")) c.localize.max_epochs = static_cast<int>(kv.integer("localize_epochs"));
  if (kv.has("severity_alpha")) c.severity.alpha = kv.number("severity_alpha");
  if (kv.has("severity_epochs")) c.severity.max_epochs = static_cast<int>(kv.integer("severity_epochs"));
  if (kv.has("threshold")) c.threshold = kv.number("threshold");
  if (kv.has("sweep_lengths")) c.sweep_lengths = kv.numbers("sweep_lengths");
  if (kv.has("sweep_rivet")) c.sweep_rivet = static_cast<int>(kv.integer("sweep_rivet"));
  try {
    validate(c);
  } catch (const ContractError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path, fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------- artifacts

std::string Artifacts::path(const std::string& name) const { return (fs::path(dir) / name).string(); }

std::string Artifacts::basis(ChannelKind block) const {
  return path(std::string("basis_") + (block == ChannelKind::accelerance ? "accel" : "strain") + ".frfd");
}

std::string Artifacts::model(const Task& task) const {
  return path(task.type == Task::Type::localize ? "model_localize.frfd"
                                                : "model_severity_" + kind_file_name(task.kind) + ".frfd");
}

std::string Artifacts::history(const Task& task) const {
  return path(task.type == Task::Type::localize ? "history_localize.csv"
                                                : "history_severity_" + kind_file_name(task.kind) + ".csv");
}

RunLog::RunLog(std::string sidecar_path, std::ostream* verbose)
    : sidecar_(std::move(sidecar_path)), verbose_(verbose) {}

void RunLog::info(const std::string& message) const {
  if (verbose_) *verbose_ << message << std::endl;
}

void RunLog::stamp(const std::string& event) const {
  info(event);
  if (sidecar_.empty()) return;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char when[32];
  std::strftime(when, sizeof when, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::ofstream out(sidecar_, std::ios::app);
  out << when << " " << event << "\n";
}

std::vector<Task> all_tasks() {
  std::vector<Task> out{Task::localize()};
  for (DamageKind k : kSeverityKinds) out.push_back(Task::severity(k));
  return out;
}

// ---------------------------------------------------------------- commands

namespace {

Artifacts prepare(const RunConfig& config) {
  fs::create_directories(config.output_dir);
  return {config.output_dir};
}

BasisPair load_bases(const Artifacts& a) {
  BasisPair b;
  b.accel = basis_from_container(read_container(a.basis(ChannelKind::accelerance)));
  b.strain = basis_from_container(read_container(a.basis(ChannelKind::strain)));
  if (b.accel.block != ChannelKind::accelerance || b.strain.block != ChannelKind::strain)
    throw DataError("basis files hold the wrong channel blocks");
  return b;
}

}  // namespace

void cmd_simulate(const RunConfig& config, const RunLog& log) {
  const Artifacts a = prepare(config);
  log.stamp("simulate: start");
  const PanelModel panel = build_panel(config.panel);
  const std::vector<ScenarioRecord> records =
      make_records(build_scenarios(config.grid), config.split, config.master_seed);
  std::vector<FrfMatrix> frfs;
  frfs.reserve(records.size());
  for (const auto& r : records) {
    frfs.push_back(synthesize_frf(panel, r, config.simulation));
    if ((r.id + 1) % 50 == 0) log.info("simulate: " + std::to_string(r.id + 1) + "/" + std::to_string(records.size()));
  }
  write_container(a.dataset(), dataset_container(records, frfs, config.to_json()));
  log.stamp("simulate: wrote " + a.dataset());
}

void cmd_fit_pca(const RunConfig& config, const RunLog& log) {
  const Artifacts a = prepare(config);
  log.stamp("fit-pca: start");
  std::vector<ScenarioRecord> records;
  std::vector<FrfMatrix> frfs;
  dataset_from_container(read_container(a.dataset()), records, frfs);
  const BasisPair bases = fit_bases(frfs, records, config.pca);
  Dataset data;
  data.records = records;
  data.features = fingerprint_matrix(frfs, bases);
  data.basis_id = bases.id();
  if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.scenario.kind == DamageKind::healthy; }))
    data.warnings.push_back("scenario list contains no healthy case");
  for (const auto& w : data.warnings) log.info("warning: " + w);
  write_container(a.basis(ChannelKind::accelerance), to_container(bases.accel));
  write_container(a.basis(ChannelKind::strain), to_container(bases.strain));
  write_container(a.fingerprints(), to_container(data));
  log.stamp("fit-pca: basis " + data.basis_id);
}

TaskModel cmd_train(const RunConfig& config, const Task& task, const RunLog& log) {
  const Artifacts a = prepare(config);
  log.stamp("train " + to_string(task) + ": start");
  const Dataset data = fingerprints_from_container(read_container(a.fingerprints()));
  const NetworkParams& params = task.type == Task::Type::localize ? config.localize : config.severity;
  TaskModel model = fit_task(task, data, params, config.master_seed);
  write_container(a.model(task), to_container(model));
  write_text(a.history(task), history_csv(model.info));
  log.stamp(strf("train %s: lambda %g, validation mse %.6g", to_string(task).c_str(), model.info.l2_lambda,
                 model.info.validation_mse));
  return model;
}

InferenceResult cmd_infer(const std::string& model_path, const std::string& frf_path, double threshold,
                          std::optional<int> scenario) {
  const TaskModel model = model_from_container(read_container(model_path, "mlp_model"));
  const BasisPair bases = load_bases({fs::path(model_path).parent_path().string()});
  if (bases.id() != model.basis_id)
    throw ContractError("infer: model basis '" + model.basis_id + "' does not match the stored bases '" + bases.id() + "'");

  const Container c = read_container(frf_path);
  FrfMatrix frf;
  InferenceResult out;
  out.task = model.task;
  if (c.schema == "frf_matrix") {
    frf = frf_from_container(c);
  } else if (c.schema == "frf_dataset") {
    if (!scenario) throw ConfigError("infer: a dataset input needs --scenario <index>");
    std::vector<ScenarioRecord> records;
    std::vector<FrfMatrix> frfs;
    dataset_from_container(c, records, frfs);
    if (*scenario < 0 || static_cast<std::size_t>(*scenario) >= frfs.size())
      throw ConfigError("infer: scenario index out of range");
    frf = frfs[static_cast<std::size_t>(*scenario)];
    out.scenario = *scenario;
  } else {
    throw DataError(frf_path + ": expected an frf_matrix or frf_dataset container, found '" + c.schema + "'");
  }
  const FeatureVector fv = project(frf, bases.accel, bases.strain);
  if (model.task.type == Task::Type::localize) out.location = localize(fv, model, threshold);
  else out.severity = estimate_severity(fv, model, model.task.kind);
  return out;
}

std::string format_inference(const InferenceResult& r) {
  std::string out = "task: " + to_string(r.task) + "\n";
  if (r.scenario >= 0) out += "scenario: " + std::to_string(r.scenario) + "\n";
  if (r.location) {
    const auto flagged = r.location->flagged();
    out += strf("threshold: %g\nflagged rivets (%zu):", r.location->threshold, flagged.size());
    for (int i : flagged) out += " " + std::to_string(i);
    out += "\ntop rivets:";
    for (int i : r.location->top(3)) out += strf(" %d (%.4f)", i, r.location->scores(i));
    out += "\n";
  }
  if (r.severity)
    out += strf("severity (%s): %.6g\n", to_string(r.severity->kind), r.severity->value);
  return out;
}

EvaluationReport cmd_evaluate(const RunConfig& config, const RunLog& log) {
  const Artifacts a = prepare(config);
  log.stamp("evaluate: start");
  const Dataset data = fingerprints_from_container(read_container(a.fingerprints()));
  DamageIdSystem system;
  system.threshold = config.threshold;
  system.neighbours = rivet_neighbours(build_panel(config.panel));
  system.localizer = model_from_container(read_container(a.model(Task::localize()), "mlp_model"));
  for (DamageKind k : kSeverityKinds)
    system.severity[k] = model_from_container(read_container(a.model(Task::severity(k)), "mlp_model"));
  const EvaluationReport report = evaluate(system, data, Split::test);
  write_text(a.evaluation_text(), format_report(report));
  write_text(a.evaluation_json(), report_json(report).dump(2) + "\n");
  write_text(a.records_csv(), records_csv(report));
  log.stamp(strf("evaluate: misclassification %.4f%%, hit rate %.4f", report.misclassification_pct,
                 report.localization_hit_rate));
  return report;
}

std::vector<double> crack_sweep(const RunConfig& config, const BasisPair& bases, const TaskModel& crack_model) {
  const PanelModel panel = build_panel(config.panel);
  std::vector<double> out;
  for (std::size_t i = 0; i < config.sweep_lengths.size(); ++i) {
    ScenarioRecord r;
    r.id = -1;
    r.scenario = DamageScenario::single(DamageKind::crack, config.sweep_rivet, config.sweep_lengths[i]);
    r.seed = derive_seed(config.master_seed, SeedStage::probe, i);
    const FeatureVector fv = project(synthesize_frf(panel, r, config.simulation), bases.accel, bases.strain);
    out.push_back(estimate_severity(fv, crack_model, DamageKind::crack, config.sweep_rivet).value);
  }
  return out;
}

int non_decreasing_steps(const std::vector<double>& values) {
  int n = 0;
  for (std::size_t i = 1; i < values.size(); ++i) n += values[i] >= values[i - 1] ? 1 : 0;
  return n;
}

ReproduceSummary cmd_reproduce(const RunConfig& config, const RunLog& log) {
  const Artifacts a = prepare(config);
  log.stamp("reproduce: start");
  cmd_simulate(config, log);
  cmd_fit_pca(config, log);
  ReproduceSummary s;
  std::map<DamageKind, TaskModel> severity;
  for (const Task& t : all_tasks()) {
    TaskModel m = cmd_train(config, t, log);
    if (t.type == Task::Type::localize) {
      s.localize_validation_mse = m.info.validation_mse;
      s.localize_restart_mse = m.info.restart_validation_mse;
    } else {
      severity[t.kind] = std::move(m);
    }
  }
  s.report = cmd_evaluate(config, log);
  const BasisPair bases = load_bases(a);
  s.basis_id = bases.id();
  s.fingerprint_length = bases.accel.output_size() + bases.strain.output_size();
  for (std::size_t ch = 0; ch < bases.accel.channels.size(); ++ch)
    s.accel_variance.push_back(variance_explained(bases.accel, ch, bases.accel.n_keep).fraction);
  s.sweep_lengths = config.sweep_lengths;
  s.sweep_predictions = crack_sweep(config, bases, severity.at(DamageKind::crack));
  s.sweep_non_decreasing = non_decreasing_steps(s.sweep_predictions);
  write_text(a.summary_text(), format_summary(s));
  write_text(a.summary_json(), summary_json(s).dump(2) + "\n");
  log.stamp("reproduce: done");
  return s;
}

// ---------------------------------------------------------------- reports

namespace {

std::string join(const std::vector<int>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

std::string format_report(const EvaluationReport& r) {
  std::string out = "scenario  kind            true rivets  flagged      hit  severity true  severity pred\n";
  for (const auto& s : r.records) {
    const std::string truth = s.scenario.rivets.empty() ? "-" : join(s.scenario.rivets, ";");
    const auto flagged = s.location.flagged();
    out += strf("%8d  %-14s  %-11s  %-11s  %-3s", s.id, to_string(s.scenario.kind), truth.c_str(),
                flagged.empty() ? "-" : join(flagged, ";").c_str(), s.hit ? "yes" : "no");
    if (s.severity) out += strf("  %13.6g  %13.6g", scenario_severity(s.scenario), s.severity->value);
    out += "\n";
  }
  out += strf("\nscenarios                %zu\n", r.records.size());
  out += strf("threshold                %g\n", r.threshold);
  out += strf("misclassification_pct    %.4f\n", r.misclassification_pct);
  out += strf("localization_hit_rate    %.4f\n", r.localization_hit_rate);
  for (const auto& [kind, err] : r.severity_mean_rel_err_pct)
    out += strf("severity_mean_rel_err_pct[%s]  %.4f  (n=%d)\n", to_string(kind), err, r.severity_count.at(kind));
  return out;
}

json report_json(const EvaluationReport& r) {
  json severity = json::object();
  for (const auto& [kind, err] : r.severity_mean_rel_err_pct)
    severity[to_string(kind)] = {{"mean_rel_err_pct", err}, {"count", r.severity_count.at(kind)}};
  return json{{"scenarios", r.records.size()},
              {"threshold", r.threshold},
              {"misclassification_pct", r.misclassification_pct},
              {"localization_hit_rate", r.localization_hit_rate},
              {"severity", severity}};
}

std::string records_csv(const EvaluationReport& r) {
  std::string out = "scenario_id,kind,true_rivets";
  for (int i = 0; i < kRivetCount; ++i) out += ",score_" + std::to_string(i);
  out += ",severity_true,severity_pred\n";
  for (const auto& s : r.records) {
    out += std::to_string(s.id) + "," + to_string(s.scenario.kind) + "," + join(s.scenario.rivets, ";");
    for (int i = 0; i < kRivetCount; ++i) out += strf(",%.17g", s.location.scores(i));
    if (s.severity) out += strf(",%.17g,%.17g\n", scenario_severity(s.scenario), s.severity->value);
    else out += ",,\n";
  }
  return out;
}

std::string history_csv(const TrainingInfo& info) {
  std::string out = "epoch,mse,objective\n";
  for (std::size_t e = 0; e < info.history.size(); ++e)
    out += strf("%zu,%.17g,%.17g\n", e + 1, info.history[e].mse, info.history[e].objective);
  return out;
}

std::string format_summary(const ReproduceSummary& s) {
  const EvaluationReport& r = s.report;
  std::string out;
  out += strf("fingerprint_length             %lld\n", static_cast<long long>(s.fingerprint_length));
  out += "basis_id                       " + s.basis_id + "\n";
  out += strf("test_scenarios                 %zu\n", r.records.size());
  out += strf("misclassification_pct          %.4f\n", r.misclassification_pct);
  out += strf("localization_hit_rate          %.4f\n", r.localization_hit_rate);
  for (const auto& [kind, err] : r.severity_mean_rel_err_pct)
    out += strf("severity_err_pct[%-14s]  %.4f\n", to_string(kind), err);
  out += strf("localize_validation_mse        %.6g\n", s.localize_validation_mse);
  out += "localize_restart_mse          ";
  for (double m : s.localize_restart_mse) out += strf(" %.6g", m);
  out += "\naccel_variance_explained      ";
  for (double v : s.accel_variance) out += strf(" %.4f", v);
  out += "\ncrack_sweep                   ";
  for (std::size_t i = 0; i < s.sweep_lengths.size(); ++i)
    out += strf(" %g->%.3f", s.sweep_lengths[i], s.sweep_predictions[i]);
  out += strf("\ncrack_sweep_non_decreasing     %d/%zu\n", s.sweep_non_decreasing,
              s.sweep_lengths.empty() ? std::size_t{0} : s.sweep_lengths.size() - 1);
  return out;
}

json summary_json(const ReproduceSummary& s) {
  return json{{"evaluation", report_json(s.report)},
              {"basis_id", s.basis_id},
              {"fingerprint_length", s.fingerprint_length},
              {"accel_variance_explained", s.accel_variance},
              {"localize_validation_mse", s.localize_validation_mse},
              {"localize_restart_mse", s.localize_restart_mse},
              {"crack_sweep", {{"lengths_mm", s.sweep_lengths}, {"predictions_mm", s.sweep_predictions},
                               {"non_decreasing_steps", s.sweep_non_decreasing}}}};
}

}  // namespace frfnet
