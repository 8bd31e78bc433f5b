#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace frfnet {

enum class ChannelKind { accelerance, strain };

const char* to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& name);

/// 12 accelerance channels followed by 4 strain channels.
std::vector<ChannelKind> default_channel_kinds();

/// Complex FRF samples, one row per measurement channel, one column per
/// spectral line on a uniform grid starting at 0 Hz.
struct FrfMatrix {
  Eigen::MatrixXcd values;
  Eigen::VectorXd freq_bins;
  std::vector<ChannelKind> channel_kinds;
  int n_averages = 0;

  Eigen::Index n_channels() const { return values.rows(); }
  Eigen::Index n_bins() const { return values.cols(); }
  /// Row indices of channels of the given kind, in storage order.
  std::vector<Eigen::Index> channels_of(ChannelKind kind) const;
  void validate() const;
};

}  // namespace frfnet
