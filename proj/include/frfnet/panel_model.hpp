#pragma once

// Lumped-parameter surrogate of a riveted stiffened panel.
//
// The skin is a rectangular grid of point masses with one out-of-plane degree
// of freedom each, coupled to its grid neighbours by shear springs and tied to
// ground along the edges. Two stiffeners run along selected grid rows; every
// stiffener node is a separate mass connected to its neighbours on the same
// stiffener and, through one rivet joint spring, to the skin node beneath it.
// Damage acts on the rivet joints (stiffness loss) or adds mass at a rivet.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "frfnet/frf.hpp"

namespace frfnet {

using Eigen::Index;

inline constexpr int kRivetCount = 34;
inline constexpr int kAccelChannels = 12;
inline constexpr int kStrainChannels = 4;
inline constexpr int kChannelCount = kAccelChannels + kStrainChannels;
inline constexpr double kCrackReferenceLengthMm = 25.0;

struct GridPoint {
  int column = 0;
  int row = 0;
  bool operator==(const GridPoint&) const = default;
};

struct RivetSite {
  int stiffener = 0;  // index into PanelConfig::stiffener_rows
  int column = 0;
};

/// Geometry and nominal properties of the surrogate. Loaded from a key-value
/// text file (see configs/panel_default.cfg for the schema).
struct PanelConfig {
  int columns = 17;
  int rows = 5;
  double node_spacing = 0.04;  // m
  double skin_mass = 0.02;     // kg per node
  double skin_stiffness_x = 2.0e5;
  double skin_stiffness_y = 2.0e5;  // N/m
  double taper_x = 0.6;  // fractional growth of skin mass/stiffness across the span
  double taper_y = 0.3;
  double support_stiffness = 1.0e5;  // N/m, edge grounding
  // edge grounding multipliers: bottom (row 0), top, left (column 0), right
  std::vector<double> support_scale{1.0, 2.0, 1.0, 0.5};
  std::vector<int> stiffener_rows{1, 3};
  std::vector<double> stiffener_mass{0.03, 0.025};
  std::vector<double> stiffener_stiffness{6.0e5, 4.0e5};
  double rivet_stiffness = 3.0e4;
  std::vector<RivetSite> rivets;  // empty: one rivet per column on every stiffener
  std::vector<GridPoint> accelerometers{{3, 2}, {8, 1}, {12, 3}, {14, 2}};
  double accelerometer_offset = 0.04;  // m, seismic mass height above mid-plane
  std::vector<GridPoint> strain_gauges{{5, 1}, {10, 2}, {2, 3}, {15, 3}};
  double gauge_length = 0.01;  // m
  GridPoint force_node{6, 2};
  double damping_ratio = 0.01;
  int n_modes = 30;
};

PanelConfig default_panel_config();
/// Parses `key = value` lines; unknown keys are a ConfigError.
PanelConfig load_panel_config(const std::string& path);
PanelConfig parse_panel_config(const std::string& text);
std::string format_panel_config(const PanelConfig& config);

enum class Axis { x, y, z };
const char* to_string(Axis axis);

/// Weighted sum of displacements that a channel observes.
struct DofWeight {
  Index dof = 0;
  double weight = 0.0;
};

struct AccelChannel {
  Index dof = 0;  // node the accelerometer sits on
  Axis axis = Axis::z;
  // Observation weights. z reads the node directly; x and y read the
  // in-plane motion of an offset seismic mass, -offset * slope, using a
  // central difference of the neighbouring out-of-plane DOFs.
  std::vector<DofWeight> weights;
};

struct StrainChannel {
  Index dof_a = 0;
  Index dof_b = 0;
  double gauge_length = 0.0;  // strain = (u_a - u_b) / gauge_length
};

struct SensorLayout {
  std::vector<AccelChannel> accel_channels;
  std::vector<StrainChannel> strain_channels;
  Index force_dof = 0;

  /// 16 x n_dof observation matrix, accelerometer rows first.
  Eigen::MatrixXd observation_matrix(Index n_dof) const;
  void validate(Index n_dof) const;
};

struct RivetJoint {
  Index skin_dof = 0;
  Index stiffener_dof = 0;
  double stiffness = 0.0;  // nominal joint stiffness, N/m
  RivetSite site;
};

struct PanelModel {
  Index n_dof = 0;
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  std::vector<RivetJoint> rivets;
  double damping_ratio = 0.01;
  int n_modes = 30;
  SensorLayout sensors;

  /// Throws ContractError if any structural invariant is violated.
  void validate() const;
  /// Rivets adjacent along the same stiffener.
  bool rivets_adjacent(int a, int b) const;
};

PanelModel build_panel(const PanelConfig& config);

enum class DamageKind { healthy, crack, hole_expansion, added_mass };
const char* to_string(DamageKind kind);
DamageKind damage_kind_from_string(const std::string& name);

struct DamageScenario {
  DamageKind kind = DamageKind::healthy;
  std::vector<int> rivets;
  // crack: length in mm; hole_expansion: stiffness-loss fraction; added_mass: kg
  std::vector<double> severity;

  static DamageScenario healthy() { return {}; }
  static DamageScenario single(DamageKind kind, int rivet, double severity) {
    return DamageScenario{kind, {rivet}, {severity}};
  }
  void validate() const;
};

/// Returns a copy of `model` with the damage applied at the scenario's rivets.
PanelModel apply_damage(const PanelModel& model, const DamageScenario& scenario);

struct ModalBasis {
  Eigen::VectorXd natural_frequencies;  // Hz, ascending
  Eigen::MatrixXd mode_shapes;          // mass-normalized columns
  double damping_ratio = 0.01;

  Index n_modes() const { return natural_frequencies.size(); }
  Eigen::VectorXd omega() const;  // rad/s
};

/// Lowest `n_modes` modes of K phi = lambda M phi.
ModalBasis modal_solve(const PanelModel& model, int n_modes);

struct FrequencyGrid {
  double f_max = 1000.0;  // Hz
  Index n_bins = 2048;

  double df() const { return f_max / static_cast<double>(n_bins); }
  Eigen::VectorXd frequencies() const;  // k * df, k = 0 .. n_bins - 1
  void validate() const;
};

/// Receptance H_qp(omega) by modal superposition.
std::complex<double> receptance(const ModalBasis& basis, Index q, Index p, double omega);

/// Channel FRFs of the sensor layout for a unit force at layout.force_dof:
/// accelerance channels return -omega^2 * (observed receptance), strain
/// channels the gauge-difference receptance divided by the gauge length.
FrfMatrix analytic_frf(const ModalBasis& basis, const SensorLayout& layout, const FrequencyGrid& grid);

}  // namespace frfnet
