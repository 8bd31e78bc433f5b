#pragma once

// Principal component compression of FRF magnitudes into damage fingerprints.
//
// Features are log10 |H| per spectral line (the 0 Hz line is skipped), floored
// a fixed number of decades below the typical channel peak so that bins
// buried in measurement noise do not dominate the variance. Each channel gets
// its own basis; a block basis (accelerance or strain) holds one per channel.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "frfnet/frf.hpp"
#include "frfnet/linalg.hpp"

namespace frfnet {

struct FeatureOptions {
  double floor_decades = 1.5;  // <= 0 disables the floor
  bool skip_dc = true;
};

struct ChannelPca {
  Eigen::Index channel = 0;       // row in the FrfMatrix
  double floor_log10 = -300.0;    // features are max(log10 |H|, floor_log10)
  Eigen::VectorXd mean;           // per feature
  Eigen::MatrixXd components;     // features x n_keep, orthonormal columns
  Eigen::VectorXd eigenvalues;    // full spectrum, descending, >= 0
};

struct PcaBasis {
  ChannelKind block = ChannelKind::accelerance;
  int n_keep = 0;  // components per channel
  Eigen::Index n_bins = 0;
  FeatureOptions options;
  std::vector<ChannelPca> channels;
  bool degenerate = false;
  std::string id;  // content hash of means, components and metadata

  Eigen::Index output_size() const { return Eigen::Index(n_keep) * static_cast<Eigen::Index>(channels.size()); }
  Eigen::Index feature_size() const { return channels.empty() ? 0 : channels.front().mean.size(); }
};

/// Fixed-length fingerprint: accelerance projections then strain projections.
struct FeatureVector {
  Eigen::VectorXd values;
  std::string basis_id;
};

/// Raw log10-magnitude features of one channel (no floor applied).
Eigen::VectorXd log_magnitude(const FrfMatrix& frf, Eigen::Index channel, const FeatureOptions& options);

/// Floored features of one channel as used by the basis.
Eigen::VectorXd channel_features(const FrfMatrix& frf, const ChannelPca& pca, const FeatureOptions& options);

/// Fits one PCA per channel of `block` on the training FRFs, keeping `n_keep`
/// components each. Uses the covariance matrix when features <= samples and
/// the sample Gram matrix otherwise; both go through the Jacobi solver.
PcaBasis fit_basis(std::span<const FrfMatrix> training, ChannelKind block, int n_keep, const FeatureOptions& options = {});

/// Principal axes of a data matrix (rows = samples).
ChannelPca fit_channel_pca(const Eigen::MatrixXd& data, int n_keep);

/// Projection onto the channel's components after centring.
Eigen::VectorXd project_channel(const ChannelPca& pca, const Eigen::VectorXd& features);

FeatureVector project(const FrfMatrix& frf, const PcaBasis& accel_basis, const PcaBasis& strain_basis);

/// Identifier of the fingerprint space spanned by a basis pair.
std::string fingerprint_space_id(const PcaBasis& accel_basis, const PcaBasis& strain_basis);

/// Recomputes the content hash stored in PcaBasis::id.
std::string basis_content_hash(const PcaBasis& basis);

struct ExplainedVariance {
  double fraction = 1.0;
  bool degenerate = false;  // total variance is zero; fraction reported as 1
};

/// Share of total variance carried by the first k eigenvalues.
ExplainedVariance variance_explained(const ChannelPca& pca, Eigen::Index k);
ExplainedVariance variance_explained(const PcaBasis& basis, std::size_t channel, Eigen::Index k);

}  // namespace frfnet
