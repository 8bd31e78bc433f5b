#include "frfnet/persistence.hpp"

#include "frfnet/errors.hpp"

namespace frfnet {

using nlohmann::json;

namespace {

void check_version(const Container& c, const std::string& schema) {
  if (c.schema != schema) throw DataError("expected a '" + schema + "' container, found '" + c.schema + "'");
  if (c.version != kSchemaVersion)
    throw DataError(schema + ": unsupported version " + std::to_string(c.version));
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json kinds_json(const std::vector<ChannelKind>& kinds) {
  json out = json::array();
  for (auto k : kinds) out.push_back(to_string(k));
  return out;
}

std::vector<ChannelKind> kinds_from_json(const json& j) {
  std::vector<ChannelKind> out;
  for (const auto& k : j) out.push_back(channel_kind_from_string(k.get<std::string>()));
  return out;
}

void append_complex(std::vector<double>& out, const Eigen::MatrixXcd& values) {
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out.push_back(values(r, c).real());
      out.push_back(values(r, c).imag());
    }
}

Eigen::MatrixXcd read_complex(const std::vector<double>& payload, std::size_t offset, Eigen::Index rows,
                              Eigen::Index cols) {
  Eigen::MatrixXcd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = {payload[offset], payload[offset + 1]};
      offset += 2;
    }
  return out;
}

template <typename T>
T field(const json& j, const char* key, const std::string& schema) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(schema + ": bad or missing metadata field '" + key + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------- records

json to_json(const DamageScenario& s) {
  return json{{"kind", to_string(s.kind)}, {"rivets", s.rivets}, {"severity", s.severity}};
}

DamageScenario scenario_from_json(const json& j) {
  DamageScenario s;
  s.kind = damage_kind_from_string(field<std::string>(j, "kind", "scenario"));
  s.rivets = field<std::vector<int>>(j, "rivets", "scenario");
  s.severity = field<std::vector<double>>(j, "severity", "scenario");
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("stored scenario is invalid: ") + e.what());
  }
  return s;
}

json to_json(const ScenarioRecord& r) {
  return json{{"id", r.id}, {"scenario", to_json(r.scenario)}, {"split", to_string(r.split)}, {"seed", r.seed}};
}

ScenarioRecord record_from_json(const json& j) {
  ScenarioRecord r;
  r.id = field<int>(j, "id", "record");
  r.scenario = scenario_from_json(j.at("scenario"));
  r.split = split_from_string(field<std::string>(j, "split", "record"));
  r.seed = field<std::uint64_t>(j, "seed", "record");
  return r;
}

// ---------------------------------------------------------------- FRFs

Container to_container(const FrfMatrix& frf) {
  frf.validate();
  Container c;
  c.schema = "frf_matrix";
  c.version = kSchemaVersion;
  c.dtype = "complex128";
  c.shape = {frf.n_channels(), frf.n_bins()};
  c.metadata = {{"freq_bins", to_vector(frf.freq_bins)},
                {"channel_kinds", kinds_json(frf.channel_kinds)},
                {"n_averages", frf.n_averages}};
  append_complex(c.payload, frf.values);
  return c;
}

FrfMatrix frf_from_container(const Container& c) {
  check_version(c, "frf_matrix");
  if (c.shape.size() != 2 || c.dtype != "complex128") throw DataError("frf_matrix: bad shape or dtype");
  FrfMatrix frf;
  frf.values = read_complex(c.payload, 0, c.shape[0], c.shape[1]);
  frf.freq_bins = to_eigen(field<std::vector<double>>(c.metadata, "freq_bins", c.schema));
  frf.channel_kinds = kinds_from_json(c.metadata.at("channel_kinds"));
  frf.n_averages = field<int>(c.metadata, "n_averages", c.schema);
  try {
    frf.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("frf_matrix: ") + e.what());
  }
  return frf;
}

Container dataset_container(const std::vector<ScenarioRecord>& records, const std::vector<FrfMatrix>& frfs,
                            const json& run) {
  require(!frfs.empty() && records.size() == frfs.size(), "dataset: records and FRFs must match and be non-empty");
  const FrfMatrix& first = frfs.front();
  Container c;
  c.schema = "frf_dataset";
  c.version = kSchemaVersion;
  c.dtype = "complex128";
  c.shape = {static_cast<std::int64_t>(frfs.size()), first.n_channels(), first.n_bins()};
  json recs = json::array();
  for (const auto& r : records) recs.push_back(to_json(r));
  c.metadata = {{"records", recs},
                {"freq_bins", to_vector(first.freq_bins)},
                {"channel_kinds", kinds_json(first.channel_kinds)},
                {"n_averages", first.n_averages},
                {"run", run}};
  c.payload.reserve(c.expected_payload_size());
  for (const auto& f : frfs) {
    require(f.n_channels() == first.n_channels() && f.n_bins() == first.n_bins(), "dataset: FRF shapes differ");
    append_complex(c.payload, f.values);
  }
  return c;
}

void dataset_from_container(const Container& c, std::vector<ScenarioRecord>& records, std::vector<FrfMatrix>& frfs) {
  check_version(c, "frf_dataset");
  if (c.shape.size() != 3 || c.dtype != "complex128") throw DataError("frf_dataset: bad shape or dtype");
  const json& recs = c.metadata.at("records");
  if (recs.size() != static_cast<std::size_t>(c.shape[0])) throw DataError("frf_dataset: record count mismatch");
  records.clear();
  frfs.clear();
  const Eigen::VectorXd freq = to_eigen(field<std::vector<double>>(c.metadata, "freq_bins", c.schema));
  const auto kinds = kinds_from_json(c.metadata.at("channel_kinds"));
  const int n_avg = field<int>(c.metadata, "n_averages", c.schema);
  const auto per = static_cast<std::size_t>(2 * c.shape[1] * c.shape[2]);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    records.push_back(record_from_json(recs[i]));
    FrfMatrix f;
    f.values = read_complex(c.payload, i * per, c.shape[1], c.shape[2]);
    f.freq_bins = freq;
    f.channel_kinds = kinds;
    f.n_averages = n_avg;
    frfs.push_back(std::move(f));
  }
}

// ---------------------------------------------------------------- bases

Container to_container(const PcaBasis& basis) {
  require(!basis.channels.empty(), "basis has no channels");
  const Eigen::Index p = basis.feature_size();
  Container c;
  c.schema = "pca_basis";
  c.version = kSchemaVersion;
  c.shape = {static_cast<std::int64_t>(basis.channels.size()), 1 + basis.n_keep, p};
  json channels = json::array();
  for (const auto& ch : basis.channels) {
    channels.push_back({{"channel", ch.channel}, {"floor_log10", ch.floor_log10}, {"eigenvalues", to_vector(ch.eigenvalues)}});
    c.payload.insert(c.payload.end(), ch.mean.data(), ch.mean.data() + p);
    for (int k = 0; k < basis.n_keep; ++k)
      c.payload.insert(c.payload.end(), ch.components.col(k).data(), ch.components.col(k).data() + p);
  }
  c.metadata = {{"block", to_string(basis.block)},
                {"n_keep", basis.n_keep},
                {"n_bins", basis.n_bins},
                {"feature", "log10_magnitude"},
                {"floor_decades", basis.options.floor_decades},
                {"skip_dc", basis.options.skip_dc},
                {"degenerate", basis.degenerate},
                {"channels", channels},
                {"id", basis.id}};
  return c;
}

PcaBasis basis_from_container(const Container& c) {
  check_version(c, "pca_basis");
  if (c.shape.size() != 3 || c.dtype != "float64") throw DataError("pca_basis: bad shape or dtype");
  const json& m = c.metadata;
  PcaBasis b;
  b.block = channel_kind_from_string(field<std::string>(m, "block", c.schema));
  b.n_keep = field<int>(m, "n_keep", c.schema);
  b.n_bins = field<Eigen::Index>(m, "n_bins", c.schema);
  b.options.floor_decades = field<double>(m, "floor_decades", c.schema);
  b.options.skip_dc = field<bool>(m, "skip_dc", c.schema);
  b.degenerate = field<bool>(m, "degenerate", c.schema);
  b.id = field<std::string>(m, "id", c.schema);
  const json& channels = m.at("channels");
  if (channels.size() != static_cast<std::size_t>(c.shape[0]) || c.shape[1] != 1 + b.n_keep)
    throw DataError("pca_basis: metadata does not match shape");
  const Eigen::Index p = c.shape[2];
  std::size_t offset = 0;
  for (const auto& cj : channels) {
    ChannelPca ch;
    ch.channel = field<Eigen::Index>(cj, "channel", c.schema);
    ch.floor_log10 = field<double>(cj, "floor_log10", c.schema);
    ch.eigenvalues = to_eigen(field<std::vector<double>>(cj, "eigenvalues", c.schema));
    ch.mean = Eigen::Map<const Eigen::VectorXd>(c.payload.data() + offset, p);
    offset += static_cast<std::size_t>(p);
    ch.components.resize(p, b.n_keep);
    for (int k = 0; k < b.n_keep; ++k) {
      ch.components.col(k) = Eigen::Map<const Eigen::VectorXd>(c.payload.data() + offset, p);
      offset += static_cast<std::size_t>(p);
    }
    b.channels.push_back(std::move(ch));
  }
  if (basis_content_hash(b) != b.id) throw DataError("pca_basis: stored id does not match the basis content");
  return b;
}

// ---------------------------------------------------------------- fingerprints

Container to_container(const Dataset& data) {
  Container c;
  c.schema = "fingerprints";
  c.version = kSchemaVersion;
  c.shape = {data.features.rows(), data.features.cols()};
  json recs = json::array();
  for (const auto& r : data.records) recs.push_back(to_json(r));
  c.metadata = {{"basis_id", data.basis_id}, {"records", recs}, {"warnings", data.warnings}};
  for (Eigen::Index r = 0; r < data.features.rows(); ++r)
    for (Eigen::Index k = 0; k < data.features.cols(); ++k) c.payload.push_back(data.features(r, k));
  return c;
}

Dataset fingerprints_from_container(const Container& c) {
  check_version(c, "fingerprints");
  if (c.shape.size() != 2 || c.dtype != "float64") throw DataError("fingerprints: bad shape or dtype");
  Dataset d;
  d.basis_id = field<std::string>(c.metadata, "basis_id", c.schema);
  d.warnings = field<std::vector<std::string>>(c.metadata, "warnings", c.schema);
  for (const auto& r : c.metadata.at("records")) d.records.push_back(record_from_json(r));
  if (d.records.size() != static_cast<std::size_t>(c.shape[0])) throw DataError("fingerprints: record count mismatch");
  d.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      c.payload.data(), c.shape[0], c.shape[1]);
  return d;
}

// ---------------------------------------------------------------- models

Container to_container(const TaskModel& model) {
  model.net.validate();
  Container c;
  c.schema = "mlp_model";
  c.version = kSchemaVersion;
  json layers = json::array();
  for (const auto& l : model.net.layers) {
    layers.push_back({{"inputs", l.weights.cols()}, {"units", l.weights.rows()}, {"activation", to_string(l.activation)}});
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index k = 0; k < l.weights.cols(); ++k) c.payload.push_back(l.weights(r, k));
    c.payload.insert(c.payload.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  c.payload.insert(c.payload.end(), model.input.mean.data(), model.input.mean.data() + model.input.mean.size());
  c.payload.insert(c.payload.end(), model.input.scale.data(), model.input.scale.data() + model.input.scale.size());
  c.shape = {static_cast<std::int64_t>(c.payload.size())};
  const TrainingInfo& i = model.info;
  json lambdas = json::array();
  for (const auto& [lambda, mse] : i.lambda_validation_mse) lambdas.push_back({{"lambda", lambda}, {"validation_mse", mse}});
  c.metadata = {{"task", to_string(model.task)},
                {"basis_id", model.basis_id},
                {"layers", layers},
                {"target_mean", model.target_mean},
                {"target_scale", model.target_scale},
                {"training",
                 {{"init_seed", i.init_seed},
                  {"shuffle_seed", i.shuffle_seed},
                  {"alpha", i.alpha},
                  {"l2_lambda", i.l2_lambda},
                  {"epochs", i.epochs},
                  {"train_mse", i.train_mse},
                  {"validation_mse", i.validation_mse},
                  {"restart_validation_mse", i.restart_validation_mse},
                  {"lambda_search", lambdas}}}};
  return c;
}

TaskModel model_from_container(const Container& c) {
  check_version(c, "mlp_model");
  if (c.shape.size() != 1 || c.dtype != "float64") throw DataError("mlp_model: bad shape or dtype");
  const json& m = c.metadata;
  TaskModel model;
  try {
    model.task = parse_task(field<std::string>(m, "task", c.schema));
  } catch (const ConfigError& e) {
    throw DataError(std::string("mlp_model: ") + e.what());
  }
  model.basis_id = field<std::string>(m, "basis_id", c.schema);
  model.target_mean = field<double>(m, "target_mean", c.schema);
  model.target_scale = field<double>(m, "target_scale", c.schema);
  std::size_t offset = 0;
  const auto take = [&](Eigen::Index n) {
    if (offset + static_cast<std::size_t>(n) > c.payload.size()) throw DataError("mlp_model: payload too short for layers");
    const double* p = c.payload.data() + offset;
    offset += static_cast<std::size_t>(n);
    return p;
  };
  for (const auto& lj : m.at("layers")) {
    Layer<double> l;
    const auto inputs = field<Eigen::Index>(lj, "inputs", c.schema);
    const auto units = field<Eigen::Index>(lj, "units", c.schema);
    l.activation = activation_from_string(field<std::string>(lj, "activation", c.schema));
    l.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        take(units * inputs), units, inputs);
    l.bias = Eigen::Map<const Eigen::VectorXd>(take(units), units);
    model.net.layers.push_back(std::move(l));
  }
  try {
    model.net.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("mlp_model: ") + e.what());
  }
  const Eigen::Index n_in = model.net.input_size();
  model.input.mean = Eigen::Map<const Eigen::VectorXd>(take(n_in), n_in);
  model.input.scale = Eigen::Map<const Eigen::VectorXd>(take(n_in), n_in);
  if (offset != c.payload.size()) throw DataError("mlp_model: trailing payload values");
  const json& t = m.at("training");
  TrainingInfo& i = model.info;
  i.init_seed = field<std::uint64_t>(t, "init_seed", c.schema);
  i.shuffle_seed = field<std::uint64_t>(t, "shuffle_seed", c.schema);
  i.alpha = field<double>(t, "alpha", c.schema);
  i.l2_lambda = field<double>(t, "l2_lambda", c.schema);
  i.epochs = field<int>(t, "epochs", c.schema);
  i.train_mse = field<double>(t, "train_mse", c.schema);
  i.validation_mse = field<double>(t, "validation_mse", c.schema);
  i.restart_validation_mse = field<std::vector<double>>(t, "restart_validation_mse", c.schema);
  for (const auto& lj : t.at("lambda_search"))
    i.lambda_validation_mse[field<double>(lj, "lambda", c.schema)] = field<double>(lj, "validation_mse", c.schema);
  return model;
}

}  // namespace frfnet
