#include "frfnet/frf.hpp"

#include <cmath>

#include "frfnet/errors.hpp"
#include "frfnet/panel_model.hpp"

namespace frfnet {

const char* to_string(ChannelKind kind) { return kind == ChannelKind::accelerance ? "accelerance" : "strain"; }

ChannelKind channel_kind_from_string(const std::string& name) {
  if (name == "accelerance") return ChannelKind::accelerance;
  if (name == "strain") return ChannelKind::strain;
  throw DataError("unknown channel kind '" + name + "'");
}

std::vector<ChannelKind> default_channel_kinds() {
  std::vector<ChannelKind> kinds(kAccelChannels, ChannelKind::accelerance);
  kinds.insert(kinds.end(), kStrainChannels, ChannelKind::strain);
  return kinds;
}

std::vector<Eigen::Index> FrfMatrix::channels_of(ChannelKind kind) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < channel_kinds.size(); ++i)
    if (channel_kinds[i] == kind) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

void FrfMatrix::validate() const {
  require(n_bins() >= 2, "FRF matrix: need at least 2 bins");
  require(freq_bins.size() == n_bins(), "FRF matrix: frequency axis length mismatch");
  require(channel_kinds.size() == static_cast<std::size_t>(n_channels()), "FRF matrix: channel kind count mismatch");
  bool strain_seen = false;
  for (auto k : channel_kinds) {
    if (k == ChannelKind::strain) strain_seen = true;
    require(!(strain_seen && k == ChannelKind::accelerance), "FRF matrix: accelerance channels must precede strain channels");
  }
  const double df = freq_bins(1) - freq_bins(0);
  require(df > 0, "FRF matrix: frequency bins must ascend");
  for (Eigen::Index k = 1; k < n_bins(); ++k)
    require(std::abs(freq_bins(k) - freq_bins(k - 1) - df) <= 1e-12 * std::max(1.0, std::abs(freq_bins(k))),
            "FRF matrix: frequency bins are not uniform");
}

}  // namespace frfnet
