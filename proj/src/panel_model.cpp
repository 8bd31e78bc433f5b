#include "frfnet/panel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "frfnet/config.hpp"
#include "frfnet/errors.hpp"
#include "frfnet/linalg.hpp"

namespace frfnet {

namespace {

std::pair<long long, long long> parse_pair(const std::string& token, char sep, const std::string& context) {
  const auto pos = token.find(sep);
  if (pos == std::string::npos) throw ConfigError(context + ": expected 'a" + sep + "b', got '" + token + "'");
  return {parse_integer(token.substr(0, pos), context), parse_integer(token.substr(pos + 1), context)};
}

std::vector<GridPoint> parse_points(const KeyValueFile& kv, const std::string& key) {
  std::vector<GridPoint> out;
  for (const auto& t : kv.tokens(key)) {
    const auto [c, r] = parse_pair(t, ',', kv.origin() + ": " + key);
    out.push_back({static_cast<int>(c), static_cast<int>(r)});
  }
  return out;
}

void add_spring(Eigen::MatrixXd& k, Index a, Index b, double stiffness) {
  k(a, a) += stiffness;
  k(b, b) += stiffness;
  k(a, b) -= stiffness;
  k(b, a) -= stiffness;
}

std::vector<RivetSite> resolve_rivets(const PanelConfig& config) {
  if (!config.rivets.empty()) return config.rivets;
  std::vector<RivetSite> sites;
  for (int s = 0; s < static_cast<int>(config.stiffener_rows.size()); ++s)
    for (int c = 0; c < config.columns; ++c) sites.push_back({s, c});
  return sites;
}

void check_config(const PanelConfig& c) {
  if (c.columns < 3 || c.rows < 3) throw ConfigError("panel: grid must be at least 3 x 3");
  if (!(c.node_spacing > 0)) throw ConfigError("panel: node_spacing must be positive");
  if (!(c.skin_mass > 0)) throw ConfigError("panel: skin_mass must be positive");
  if (!(c.skin_stiffness_x > 0) || !(c.skin_stiffness_y > 0)) throw ConfigError("panel: skin stiffness must be positive");
  if (!(c.support_stiffness > 0)) throw ConfigError("panel: support_stiffness must be positive");
  if (c.support_scale.size() != 4) throw ConfigError("panel: support_scale needs 4 entries (bottom top left right)");
  for (double s : c.support_scale)
    if (!(s >= 0)) throw ConfigError("panel: support_scale entries must be non-negative");
  if (c.taper_x <= -1 || c.taper_y <= -1 || c.taper_x + c.taper_y <= -1)
    throw ConfigError("panel: taper would make properties non-positive");
  const std::size_t n_stiff = c.stiffener_rows.size();
  if (n_stiff == 0) throw ConfigError("panel: at least one stiffener row is required");
  if (c.stiffener_mass.size() != n_stiff || c.stiffener_stiffness.size() != n_stiff)
    throw ConfigError("panel: stiffener_mass and stiffener_stiffness need one entry per stiffener row");
  for (std::size_t s = 0; s < n_stiff; ++s) {
    if (c.stiffener_rows[s] < 0 || c.stiffener_rows[s] >= c.rows) throw ConfigError("panel: stiffener row outside grid");
    if (!(c.stiffener_mass[s] > 0) || !(c.stiffener_stiffness[s] > 0))
      throw ConfigError("panel: stiffener mass and stiffness must be positive");
  }
  if (!(c.rivet_stiffness > 0)) throw ConfigError("panel: rivet_stiffness must be positive");
  if (!(c.damping_ratio > 0 && c.damping_ratio < 0.2)) throw ConfigError("panel: damping_ratio must lie in (0, 0.2)");
  if (c.n_modes < 1) throw ConfigError("panel: n_modes must be at least 1");
  if (c.accelerometers.size() * 3 != static_cast<std::size_t>(kAccelChannels))
    throw ConfigError("panel: exactly 4 tri-axial accelerometers are required");
  if (c.strain_gauges.size() != static_cast<std::size_t>(kStrainChannels))
    throw ConfigError("panel: exactly 4 strain gauges are required");
  if (!(c.gauge_length > 0)) throw ConfigError("panel: gauge_length must be positive");
  if (!(c.accelerometer_offset > 0)) throw ConfigError("panel: accelerometer_offset must be positive");
  auto inside = [&](GridPoint p) { return p.column >= 0 && p.column < c.columns && p.row >= 0 && p.row < c.rows; };
  for (const auto& p : c.accelerometers)
    if (!inside(p)) throw ConfigError("panel: accelerometer references a node outside the grid");
  for (const auto& p : c.strain_gauges)
    if (!inside(p) || p.column + 1 >= c.columns) throw ConfigError("panel: strain gauge references a node outside the grid");
  if (!inside(c.force_node)) throw ConfigError("panel: force node outside the grid");
}

}  // namespace

const char* to_string(Axis axis) {
  switch (axis) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

const char* to_string(DamageKind kind) {
  switch (kind) {
    case DamageKind::healthy: return "healthy";
    case DamageKind::crack: return "crack";
    case DamageKind::hole_expansion: return "hole_expansion";
    case DamageKind::added_mass: return "added_mass";
  }
  return "?";
}

DamageKind damage_kind_from_string(const std::string& name) {
  if (name == "healthy") return DamageKind::healthy;
  if (name == "crack") return DamageKind::crack;
  if (name == "hole_expansion") return DamageKind::hole_expansion;
  if (name == "added_mass") return DamageKind::added_mass;
  throw ConfigError("unknown damage kind '" + name + "'");
}

PanelConfig default_panel_config() { return PanelConfig{}; }

PanelConfig parse_panel_config(const std::string& text) {
  const KeyValueFile kv = KeyValueFile::parse(text, "panel config");
  kv.reject_unknown({"columns", "rows", "node_spacing", "skin_mass", "skin_stiffness_x", "skin_stiffness_y", "taper_x",
                     "taper_y", "support_stiffness", "support_scale", "stiffener_rows", "stiffener_mass",
                     "stiffener_stiffness", "rivet_stiffness", "rivets", "accelerometers", "accelerometer_offset",
                     "strain_gauges", "gauge_length", "force_node", "damping_ratio", "n_modes"});
  PanelConfig c;
  if (kv.has("columns")) c.columns = static_cast<int>(kv.integer("columns"));
  if (kv.has("rows")) c.rows = static_cast<int>(kv.integer("rows"));
  if (kv.has("node_spacing")) c.node_spacing = kv.number("node_spacing");
  if (kv.has("skin_mass")) c.skin_mass = kv.number("skin_mass");
  if (kv.has("skin_stiffness_x")) c.skin_stiffness_x = kv.number("skin_stiffness_x");
  if (kv.has("skin_stiffness_y")) c.skin_stiffness_y = kv.number("skin_stiffness_y");
  if (kv.has("taper_x")) c.taper_x = kv.number("taper_x");
  if (kv.has("taper_y")) c.taper_y = kv.number("taper_y");
  if (kv.has("support_stiffness")) c.support_stiffness = kv.number("support_stiffness");
  if (kv.has("support_scale")) c.support_scale = kv.numbers("support_scale");
  if (kv.has("stiffener_rows")) {
    c.stiffener_rows.clear();
    for (long long r : kv.integers("stiffener_rows")) c.stiffener_rows.push_back(static_cast<int>(r));
  }
  if (kv.has("stiffener_mass")) c.stiffener_mass = kv.numbers("stiffener_mass");
  if (kv.has("stiffener_stiffness")) c.stiffener_stiffness = kv.numbers("stiffener_stiffness");
  if (kv.has("rivet_stiffness")) c.rivet_stiffness = kv.number("rivet_stiffness");
  if (kv.has("rivets")) {
    c.rivets.clear();
    const auto tokens = kv.tokens("rivets");
    if (!(tokens.size() == 1 && tokens[0] == "auto"))
      for (const auto& t : tokens) {
        const auto [s, col] = parse_pair(t, ':', kv.origin() + ": rivets");
        c.rivets.push_back({static_cast<int>(s), static_cast<int>(col)});
      }
  }
  if (kv.has("accelerometers")) c.accelerometers = parse_points(kv, "accelerometers");
  if (kv.has("accelerometer_offset")) c.accelerometer_offset = kv.number("accelerometer_offset");
  if (kv.has("strain_gauges")) c.strain_gauges = parse_points(kv, "strain_gauges");
  if (kv.has("gauge_length")) c.gauge_length = kv.number("gauge_length");
  if (kv.has("force_node")) {
    const auto points = parse_points(kv, "force_node");
    if (points.size() != 1) throw ConfigError("panel config: force_node takes one 'column,row' pair");
    c.force_node = points.front();
  }
  if (kv.has("damping_ratio")) c.damping_ratio = kv.number("damping_ratio");
  if (kv.has("n_modes")) c.n_modes = static_cast<int>(kv.integer("n_modes"));
  return c;
}

PanelConfig load_panel_config(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  std::ostringstream text;
  for (const auto& [key, value] : kv.entries()) text << key << " = " << value << "\n";
  try {
    return parse_panel_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string format_panel_config(const PanelConfig& c) {
  std::ostringstream out;
  out.precision(17);
  auto list = [&](const auto& values) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) s << (i ? " " : "") << values[i];
    return s.str();
  };
  auto points = [&](const std::vector<GridPoint>& ps) {
    std::ostringstream s;
    for (std::size_t i = 0; i < ps.size(); ++i) s << (i ? " " : "") << ps[i].column << "," << ps[i].row;
    return s.str();
  };
  out << "columns = " << c.columns << "\n"
      << "rows = " << c.rows << "\n"
      << "node_spacing = " << c.node_spacing << "\n"
      << "skin_mass = " << c.skin_mass << "\n"
      << "skin_stiffness_x = " << c.skin_stiffness_x << "\n"
      << "skin_stiffness_y = " << c.skin_stiffness_y << "\n"
      << "taper_x = " << c.taper_x << "\n"
      << "taper_y = " << c.taper_y << "\n"
      << "support_stiffness = " << c.support_stiffness << "\n"
      << "support_scale = " << list(c.support_scale) << "\n"
      << "stiffener_rows = " << list(c.stiffener_rows) << "\n"
      << "stiffener_mass = " << list(c.stiffener_mass) << "\n"
      << "stiffener_stiffness = " << list(c.stiffener_stiffness) << "\n"
      << "rivet_stiffness = " << c.rivet_stiffness << "\n";
  out << "rivets =";
  if (c.rivets.empty()) out << " auto";
  for (const auto& r : c.rivets) out << " " << r.stiffener << ":" << r.column;
  out << "\n"
      << "accelerometers = " << points(c.accelerometers) << "\n"
      << "accelerometer_offset = " << c.accelerometer_offset << "\n"
      << "strain_gauges = " << points(c.strain_gauges) << "\n"
      << "gauge_length = " << c.gauge_length << "\n"
      << "force_node = " << c.force_node.column << "," << c.force_node.row << "\n"
      << "damping_ratio = " << c.damping_ratio << "\n"
      << "n_modes = " << c.n_modes << "\n";
  return out.str();
}

Eigen::MatrixXd SensorLayout::observation_matrix(Index n_dof) const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Index>(accel_channels.size() + strain_channels.size()), n_dof);
  Index row = 0;
  for (const auto& ch : accel_channels) {
    if (ch.weights.empty())
      c(row, ch.dof) = 1.0;
    else
      for (const auto& w : ch.weights) c(row, w.dof) += w.weight;
    ++row;
  }
  for (const auto& ch : strain_channels) {
    c(row, ch.dof_a) += 1.0 / ch.gauge_length;
    c(row, ch.dof_b) -= 1.0 / ch.gauge_length;
    ++row;
  }
  return c;
}

void SensorLayout::validate(Index n_dof) const {
  require(accel_channels.size() == static_cast<std::size_t>(kAccelChannels), "sensor layout: need 12 accelerometer channels");
  require(strain_channels.size() == static_cast<std::size_t>(kStrainChannels), "sensor layout: need 4 strain channels");
  auto valid = [&](Index dof) { return dof >= 0 && dof < n_dof; };
  for (const auto& ch : accel_channels) {
    require(valid(ch.dof), "sensor layout: accelerometer dof out of range");
    for (const auto& w : ch.weights) require(valid(w.dof), "sensor layout: accelerometer weight dof out of range");
  }
  for (const auto& ch : strain_channels) {
    require(valid(ch.dof_a) && valid(ch.dof_b), "sensor layout: strain gauge dof out of range");
    require(ch.gauge_length > 0, "sensor layout: gauge length must be positive");
  }
  require(valid(force_dof), "sensor layout: force dof out of range");
}

void PanelModel::validate() const {
  require(mass.rows() == n_dof && mass.cols() == n_dof, "panel: mass matrix shape");
  require(stiffness.rows() == n_dof && stiffness.cols() == n_dof, "panel: stiffness matrix shape");
  require((mass - mass.transpose()).norm() <= 1e-12 * mass.norm(), "panel: mass matrix not symmetric");
  require((stiffness - stiffness.transpose()).norm() <= 1e-12 * stiffness.norm(), "panel: stiffness matrix not symmetric");
  require(Eigen::LLT<Eigen::MatrixXd>(mass).info() == Eigen::Success, "panel: mass matrix is not positive definite");
  require(rivets.size() == static_cast<std::size_t>(kRivetCount), "panel: rivet map must have 34 entries");
  std::set<std::pair<Index, Index>> pairs;
  for (const auto& r : rivets) {
    require(r.skin_dof >= 0 && r.skin_dof < n_dof && r.stiffener_dof >= 0 && r.stiffener_dof < n_dof,
            "panel: rivet dof out of range");
    require(pairs.insert({r.skin_dof, r.stiffener_dof}).second, "panel: duplicate rivet dof pair");
  }
  require(damping_ratio > 0 && damping_ratio < 0.2, "panel: damping ratio outside (0, 0.2)");
  sensors.validate(n_dof);
}

bool PanelModel::rivets_adjacent(int a, int b) const {
  const auto& ra = rivets.at(static_cast<std::size_t>(a)).site;
  const auto& rb = rivets.at(static_cast<std::size_t>(b)).site;
  return ra.stiffener == rb.stiffener && std::abs(ra.column - rb.column) == 1;
}

PanelModel build_panel(const PanelConfig& config) {
  check_config(config);
  const std::vector<RivetSite> sites = resolve_rivets(config);
  if (sites.size() != static_cast<std::size_t>(kRivetCount))
    throw ConfigError("panel: exactly 34 rivet sites are required, config gives " + std::to_string(sites.size()));

  const int nc = config.columns;
  const int nr = config.rows;
  const Index n_skin = Index(nc) * nr;
  const Index n_stiff = Index(config.stiffener_rows.size());
  const Index n = n_skin + n_stiff * nc;
  auto skin = [&](int c, int r) { return Index(r) * nc + c; };
  auto stiff = [&](int s, int c) { return n_skin + Index(s) * nc + c; };

  PanelModel model;
  model.n_dof = n;
  model.mass = Eigen::MatrixXd::Zero(n, n);
  model.stiffness = Eigen::MatrixXd::Zero(n, n);
  model.damping_ratio = config.damping_ratio;
  model.n_modes = config.n_modes;

  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) {
      const double taper = 1.0 + config.taper_x * c / (nc - 1) + config.taper_y * r / (nr - 1);
      model.mass(skin(c, r), skin(c, r)) = config.skin_mass * taper;
      if (c + 1 < nc) add_spring(model.stiffness, skin(c, r), skin(c + 1, r), config.skin_stiffness_x * taper);
      if (r + 1 < nr) add_spring(model.stiffness, skin(c, r), skin(c, r + 1), config.skin_stiffness_y * taper);
    }
  }
  const auto& scale = config.support_scale;
  for (int c = 0; c < nc; ++c) {
    model.stiffness(skin(c, 0), skin(c, 0)) += config.support_stiffness * scale[0];
    model.stiffness(skin(c, nr - 1), skin(c, nr - 1)) += config.support_stiffness * scale[1];
  }
  for (int r = 0; r < nr; ++r) {
    model.stiffness(skin(0, r), skin(0, r)) += config.support_stiffness * scale[2];
    model.stiffness(skin(nc - 1, r), skin(nc - 1, r)) += config.support_stiffness * scale[3];
  }
  for (int s = 0; s < n_stiff; ++s) {
    for (int c = 0; c < nc; ++c) {
      model.mass(stiff(s, c), stiff(s, c)) = config.stiffener_mass[static_cast<std::size_t>(s)];
      if (c + 1 < nc)
        add_spring(model.stiffness, stiff(s, c), stiff(s, c + 1), config.stiffener_stiffness[static_cast<std::size_t>(s)]);
    }
  }
  for (const auto& site : sites) {
    if (site.stiffener < 0 || site.stiffener >= n_stiff || site.column < 0 || site.column >= nc)
      throw ConfigError("panel: rivet site outside the stiffener grid");
    RivetJoint joint;
    joint.skin_dof = skin(site.column, config.stiffener_rows[static_cast<std::size_t>(site.stiffener)]);
    joint.stiffener_dof = stiff(site.stiffener, site.column);
    joint.stiffness = config.rivet_stiffness;
    joint.site = site;
    add_spring(model.stiffness, joint.skin_dof, joint.stiffener_dof, joint.stiffness);
    model.rivets.push_back(joint);
  }

  // Accelerometer in-plane axes: u = -offset * dw/dx (central difference,
  // one-sided at the grid edge).
  const double e = config.accelerometer_offset;
  const double h = config.node_spacing;
  for (const auto& p : config.accelerometers) {
    const Index centre = skin(p.column, p.row);
    for (Axis axis : {Axis::x, Axis::y, Axis::z}) {
      AccelChannel ch;
      ch.dof = centre;
      ch.axis = axis;
      if (axis == Axis::z) {
        ch.weights = {{centre, 1.0}};
      } else {
        const bool along_x = axis == Axis::x;
        const int pos = along_x ? p.column : p.row;
        const int limit = along_x ? nc : nr;
        const int lo = std::max(pos - 1, 0);
        const int hi = std::min(pos + 1, limit - 1);
        const Index dof_lo = along_x ? skin(lo, p.row) : skin(p.column, lo);
        const Index dof_hi = along_x ? skin(hi, p.row) : skin(p.column, hi);
        const double span = h * (hi - lo);
        ch.weights = {{dof_hi, -e / span}, {dof_lo, e / span}};
      }
      model.sensors.accel_channels.push_back(std::move(ch));
    }
  }
  for (const auto& p : config.strain_gauges)
    model.sensors.strain_channels.push_back({skin(p.column + 1, p.row), skin(p.column, p.row), config.gauge_length});
  model.sensors.force_dof = skin(config.force_node.column, config.force_node.row);

  model.validate();
  return model;
}

void DamageScenario::validate() const {
  if (rivets.size() != severity.size()) throw ContractError("damage scenario: severity list length must equal rivet list length");
  if (kind == DamageKind::healthy) {
    if (!rivets.empty()) throw ContractError("damage scenario: healthy scenario cannot name rivets");
    return;
  }
  std::set<int> seen;
  for (std::size_t i = 0; i < rivets.size(); ++i) {
    const int r = rivets[i];
    const double s = severity[i];
    if (r < 0 || r >= kRivetCount) throw ContractError("damage scenario: rivet index " + std::to_string(r) + " out of range");
    if (!seen.insert(r).second) throw ContractError("damage scenario: rivet " + std::to_string(r) + " listed twice");
    if (!std::isfinite(s)) throw ContractError("damage scenario: non-finite severity");
    switch (kind) {
      case DamageKind::crack:
        if (s < 0 || s >= kCrackReferenceLengthMm)
          throw ContractError("damage scenario: crack length must lie in [0, 25) mm");
        break;
      case DamageKind::hole_expansion:
        if (s < 0 || s >= 1) throw ContractError("damage scenario: hole expansion loss must lie in [0, 1)");
        break;
      case DamageKind::added_mass:
        if (s < 0) throw ContractError("damage scenario: added mass must be non-negative");
        break;
      case DamageKind::healthy: break;
    }
  }
}

PanelModel apply_damage(const PanelModel& model, const DamageScenario& scenario) {
  scenario.validate();
  PanelModel out = model;
  for (std::size_t i = 0; i < scenario.rivets.size(); ++i) {
    auto& joint = out.rivets[static_cast<std::size_t>(scenario.rivets[i])];
    const double s = scenario.severity[i];
    switch (scenario.kind) {
      case DamageKind::crack:
      case DamageKind::hole_expansion: {
        const double factor = scenario.kind == DamageKind::crack ? 1.0 - s / kCrackReferenceLengthMm : 1.0 - s;
        const double new_stiffness = joint.stiffness * factor;
        add_spring(out.stiffness, joint.skin_dof, joint.stiffener_dof, new_stiffness - joint.stiffness);
        joint.stiffness = new_stiffness;
        break;
      }
      case DamageKind::added_mass:
        out.mass(joint.skin_dof, joint.skin_dof) += 0.5 * s;
        out.mass(joint.stiffener_dof, joint.stiffener_dof) += 0.5 * s;
        break;
      case DamageKind::healthy: break;
    }
  }
  return out;
}

Eigen::VectorXd ModalBasis::omega() const { return 2.0 * std::numbers::pi * natural_frequencies; }

ModalBasis modal_solve(const PanelModel& model, int n_modes) {
  const Index n = model.n_dof;
  if (n_modes < 1 || n_modes > n)
    throw ContractError("modal_solve: n_modes must lie in [1, n_dof] (" + std::to_string(n_modes) + " requested)");
  const Eigen::LLT<Eigen::MatrixXd> llt(model.mass);
  if (llt.info() != Eigen::Success) throw ContractError("modal_solve: mass matrix is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  // A = L^-1 K L^-T shares eigenvalues with the pencil (K, M).
  const Eigen::MatrixXd half = lower.triangularView<Eigen::Lower>().solve(model.stiffness);
  Eigen::MatrixXd reduced = lower.triangularView<Eigen::Lower>().solve(half.transpose());
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  const SymmetricEigen<double> eig = eig_sym(reduced);

  ModalBasis basis;
  basis.damping_ratio = model.damping_ratio;
  basis.natural_frequencies.resize(n_modes);
  Eigen::MatrixXd y(n, n_modes);
  for (int k = 0; k < n_modes; ++k) {
    const Index src = n - 1 - k;  // eig is descending
    basis.natural_frequencies(k) = std::sqrt(std::max(eig.values(src), 0.0)) / (2.0 * std::numbers::pi);
    y.col(k) = eig.vectors.col(src);
  }
  basis.mode_shapes = lower.transpose().triangularView<Eigen::Upper>().solve(y);
  return basis;
}

Eigen::VectorXd FrequencyGrid::frequencies() const {
  return Eigen::VectorXd::LinSpaced(n_bins, 0.0, df() * static_cast<double>(n_bins - 1));
}

void FrequencyGrid::validate() const {
  require(f_max > 0, "frequency grid: f_max must be positive");
  require(n_bins >= 2, "frequency grid: need at least 2 bins");
}

std::complex<double> receptance(const ModalBasis& basis, Index q, Index p, double omega) {
  const Eigen::VectorXd wr = basis.omega();
  std::complex<double> h(0.0, 0.0);
  for (Index r = 0; r < basis.n_modes(); ++r) {
    const std::complex<double> den(wr(r) * wr(r) - omega * omega, 2.0 * basis.damping_ratio * wr(r) * omega);
    if (den == std::complex<double>(0.0, 0.0)) throw ContractError("receptance: evaluation exactly at an undamped resonance");
    h += basis.mode_shapes(q, r) * basis.mode_shapes(p, r) / den;
  }
  return h;
}

FrfMatrix analytic_frf(const ModalBasis& basis, const SensorLayout& layout, const FrequencyGrid& grid) {
  grid.validate();
  require(basis.n_modes() > 0, "analytic_frf: modal basis is empty");
  const Index n_dof = basis.mode_shapes.rows();
  layout.validate(n_dof);
  const Eigen::MatrixXd observed = layout.observation_matrix(n_dof) * basis.mode_shapes;  // channels x modes
  const Eigen::RowVectorXd at_force = basis.mode_shapes.row(layout.force_dof);
  const Eigen::MatrixXd residues = observed.array().rowwise() * at_force.array();
  const Eigen::VectorXd wr = basis.omega();
  const double zeta = basis.damping_ratio;

  FrfMatrix frf;
  frf.freq_bins = grid.frequencies();
  frf.channel_kinds.assign(layout.accel_channels.size(), ChannelKind::accelerance);
  frf.channel_kinds.insert(frf.channel_kinds.end(), layout.strain_channels.size(), ChannelKind::strain);
  frf.n_averages = 0;
  const Index n_accel = static_cast<Index>(layout.accel_channels.size());
  frf.values.resize(residues.rows(), grid.n_bins);
  Eigen::VectorXcd inv_den(basis.n_modes());
  for (Index k = 0; k < grid.n_bins; ++k) {
    const double w = 2.0 * std::numbers::pi * frf.freq_bins(k);
    for (Index r = 0; r < basis.n_modes(); ++r) {
      const std::complex<double> den(wr(r) * wr(r) - w * w, 2.0 * zeta * wr(r) * w);
      if (den == std::complex<double>(0.0, 0.0))
        throw ContractError("analytic_frf: grid bin lies on an undamped resonance");
      inv_den(r) = 1.0 / den;
    }
    frf.values.col(k) = residues.cast<std::complex<double>>() * inv_den;
    frf.values.col(k).head(n_accel) *= -w * w;
  }
  return frf;
}

}  // namespace frfnet
