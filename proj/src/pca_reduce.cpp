#include "frfnet/pca_reduce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "frfnet/errors.hpp"
#include "frfnet/hashing.hpp"

namespace frfnet {

namespace {

constexpr double kLogFloorless = -300.0;

// Two passes of modified Gram-Schmidt; columns that collapse are replaced by
// the first unit vector that is not yet spanned.
void orthonormalize(Eigen::MatrixXd& q) {
  const Eigen::Index n = q.rows();
  Eigen::Index next_unit = 0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    double norm = q.col(j).norm();
    while (norm < 1e-8) {
      require(next_unit < n, "orthonormalize: cannot complete basis");
      q.col(j) = Eigen::VectorXd::Unit(n, next_unit++);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      norm = q.col(j).norm();
    }
    q.col(j) /= norm;
  }
}

void fix_signs(Eigen::MatrixXd& components) {
  for (Eigen::Index j = 0; j < components.cols(); ++j) {
    Eigen::Index arg = 0;
    components.col(j).cwiseAbs().maxCoeff(&arg);
    if (components(arg, j) < 0) components.col(j) *= -1.0;
  }
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Eigen::VectorXd log_magnitude(const FrfMatrix& frf, Eigen::Index channel, const FeatureOptions& options) {
  require(channel >= 0 && channel < frf.n_channels(), "log_magnitude: channel out of range");
  const Eigen::Index first = options.skip_dc ? 1 : 0;
  const Eigen::Index n = frf.n_bins() - first;
  Eigen::VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mag = std::abs(frf.values(channel, first + k));
    out(k) = mag > 0 ? std::log10(mag) : kLogFloorless;
  }
  return out;
}

Eigen::VectorXd channel_features(const FrfMatrix& frf, const ChannelPca& pca, const FeatureOptions& options) {
  return log_magnitude(frf, pca.channel, options).cwiseMax(pca.floor_log10);
}

ChannelPca fit_channel_pca(const Eigen::MatrixXd& data, int n_keep) {
  const Eigen::Index n_samples = data.rows();
  const Eigen::Index n_features = data.cols();
  if (n_samples < 2) throw ContractError("fit_basis: need at least 2 training samples");
  if (n_keep < 1 || n_keep > n_features)
    throw ContractError("fit_basis: n_keep must lie in [1, " + std::to_string(n_features) + "]");

  ChannelPca pca;
  pca.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - pca.mean.transpose();

  if (n_features <= n_samples) {
    const SymmetricEigen<double> eig = eig_sym(covariance(data));
    pca.eigenvalues = eig.values.cwiseMax(0.0);
    pca.components = eig.vectors.leftCols(n_keep);
  } else {
    // Dual route: C = Xc^T Xc / (n-1) and G = Xc Xc^T / (n-1) share their
    // non-zero eigenvalues, with v = Xc^T u / sqrt((n-1) mu).
    if (n_keep > n_samples)
      throw ContractError("fit_basis: n_keep exceeds the sample count for a wide data matrix");
    Eigen::MatrixXd gram = centered * centered.transpose() / double(n_samples - 1);
    gram = 0.5 * (gram + gram.transpose()).eval();
    const SymmetricEigen<double> eig = eig_sym(gram);
    pca.eigenvalues = eig.values.cwiseMax(0.0);
    const double scale = std::max(pca.eigenvalues(0), 0.0);
    pca.components.resize(n_features, n_keep);
    for (int j = 0; j < n_keep; ++j) {
      const double mu = pca.eigenvalues(j);
      if (mu > 1e-13 * scale && mu > 0)
        pca.components.col(j) = centered.transpose() * eig.vectors.col(j) / std::sqrt(double(n_samples - 1) * mu);
      else
        pca.components.col(j).setZero();  // completed below
    }
  }
  // eigenvalues within the rounding noise of the centred data are zero
  const double noise = std::pow(4.0 * std::numeric_limits<double>::epsilon() * data.cwiseAbs().maxCoeff(), 2) *
                       static_cast<double>(n_features);
  pca.eigenvalues = (pca.eigenvalues.array() <= noise).select(0.0, pca.eigenvalues);
  orthonormalize(pca.components);
  fix_signs(pca.components);
  return pca;
}

PcaBasis fit_basis(std::span<const FrfMatrix> training, ChannelKind block, int n_keep, const FeatureOptions& options) {
  if (training.size() < 2) throw ContractError("fit_basis: need at least 2 training FRFs");
  const FrfMatrix& first = training.front();
  const std::vector<Eigen::Index> rows = first.channels_of(block);
  if (rows.empty()) throw ContractError(std::string("fit_basis: no ") + to_string(block) + " channels");
  for (const auto& frf : training)
    if (frf.n_bins() != first.n_bins() || frf.channel_kinds != first.channel_kinds)
      throw ContractError("fit_basis: training FRFs differ in shape or channel layout");

  PcaBasis basis;
  basis.block = block;
  basis.n_keep = n_keep;
  basis.n_bins = first.n_bins();
  basis.options = options;
  bool all_degenerate = true;
  for (const Eigen::Index row : rows) {
    const Eigen::Index n_features = log_magnitude(first, row, options).size();
    Eigen::MatrixXd data(static_cast<Eigen::Index>(training.size()), n_features);
    std::vector<double> peaks;
    for (std::size_t i = 0; i < training.size(); ++i) {
      data.row(static_cast<Eigen::Index>(i)) = log_magnitude(training[i], row, options).transpose();
      peaks.push_back(data.row(static_cast<Eigen::Index>(i)).maxCoeff());
    }
    double floor = kLogFloorless;
    if (options.floor_decades > 0) {
      floor = median(peaks) - options.floor_decades;
      data = data.cwiseMax(floor);
    }
    ChannelPca pca = fit_channel_pca(data, n_keep);
    pca.channel = row;
    pca.floor_log10 = floor;
    if (pca.eigenvalues.sum() > 0) all_degenerate = false;
    basis.channels.push_back(std::move(pca));
  }
  basis.degenerate = all_degenerate;
  basis.id = basis_content_hash(basis);
  return basis;
}

Eigen::VectorXd project_channel(const ChannelPca& pca, const Eigen::VectorXd& features) {
  if (features.size() != pca.mean.size())
    throw ContractError("project: feature length " + std::to_string(features.size()) + " does not match basis (" +
                        std::to_string(pca.mean.size()) + ")");
  return pca.components.transpose() * (features - pca.mean);
}

namespace {

void project_block(const FrfMatrix& frf, const PcaBasis& basis, Eigen::Ref<Eigen::VectorXd> out) {
  if (frf.n_bins() != basis.n_bins)
    throw ContractError("project: FRF has " + std::to_string(frf.n_bins()) + " bins, basis expects " +
                        std::to_string(basis.n_bins));
  Eigen::Index offset = 0;
  for (const auto& pca : basis.channels) {
    if (pca.channel >= frf.n_channels() || frf.channel_kinds[static_cast<std::size_t>(pca.channel)] != basis.block)
      throw ContractError("project: FRF channel layout does not match the basis");
    out.segment(offset, basis.n_keep) = project_channel(pca, channel_features(frf, pca, basis.options));
    offset += basis.n_keep;
  }
}

}  // namespace

FeatureVector project(const FrfMatrix& frf, const PcaBasis& accel_basis, const PcaBasis& strain_basis) {
  require(accel_basis.block == ChannelKind::accelerance && strain_basis.block == ChannelKind::strain,
          "project: bases passed in the wrong order");
  FeatureVector fv;
  fv.values.resize(accel_basis.output_size() + strain_basis.output_size());
  project_block(frf, accel_basis, fv.values.head(accel_basis.output_size()));
  project_block(frf, strain_basis, fv.values.tail(strain_basis.output_size()));
  if (!fv.values.allFinite()) throw DataError("project: non-finite fingerprint");
  fv.basis_id = fingerprint_space_id(accel_basis, strain_basis);
  return fv;
}

std::string fingerprint_space_id(const PcaBasis& accel_basis, const PcaBasis& strain_basis) {
  return sha256_hex(accel_basis.id + ":" + strain_basis.id).substr(0, 16);
}

std::string basis_content_hash(const PcaBasis& basis) {
  Sha256 h;
  std::ostringstream meta;
  meta.precision(17);
  meta << to_string(basis.block) << ";" << basis.n_keep << ";" << basis.n_bins << ";" << basis.options.floor_decades
       << ";" << basis.options.skip_dc << ";" << basis.channels.size();
  h.update(meta.str());
  for (const auto& pca : basis.channels) {
    const double header[2] = {static_cast<double>(pca.channel), pca.floor_log10};
    h.update(std::span<const double>(header));
    h.update(std::span<const double>(pca.mean.data(), static_cast<std::size_t>(pca.mean.size())));
    h.update(std::span<const double>(pca.components.data(), static_cast<std::size_t>(pca.components.size())));
  }
  return h.hex_digest().substr(0, 16);
}

ExplainedVariance variance_explained(const ChannelPca& pca, Eigen::Index k) {
  if (k < 0 || k > pca.eigenvalues.size())
    throw ContractError("variance_explained: k must lie in [0, " + std::to_string(pca.eigenvalues.size()) + "]");
  const double total = pca.eigenvalues.sum();
  if (!(total > 0)) return {1.0, true};
  if (k == pca.eigenvalues.size()) return {1.0, false};
  return {std::min(1.0, pca.eigenvalues.head(k).sum() / total), false};
}

ExplainedVariance variance_explained(const PcaBasis& basis, std::size_t channel, Eigen::Index k) {
  require(channel < basis.channels.size(), "variance_explained: channel out of range");
  return variance_explained(basis.channels[channel], k);
}

}  // namespace frfnet
