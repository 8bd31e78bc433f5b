#include <gtest/gtest.h>

#include <random>

#include "frfnet/errors.hpp"
#include "frfnet/panel_model.hpp"
#include "frfnet/pca_reduce.hpp"
#include "frfnet/signal_lab.hpp"

using namespace frfnet;

namespace {

Eigen::MatrixXd gaussian_data(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = g(rng) * (1.0 + double(j));
  return x;
}

// Small set of measured panel FRFs on a coarse grid.
std::vector<FrfMatrix> panel_frfs(int n, double snr = 30.0) {
  const auto panel = build_panel(default_panel_config());
  const FrequencyGrid grid{1000.0, 128};
  std::vector<FrfMatrix> out;
  for (int i = 0; i < n; ++i) {
    const auto scenario = i == 0 ? DamageScenario::healthy()
                                 : DamageScenario::single(DamageKind::crack, i % 34, 2.0 + double(i % 9) * 2.0);
    const auto truth = analytic_frf(modal_solve(apply_damage(panel, scenario), panel.n_modes), panel.sensors, grid);
    out.push_back(measure_frf(truth, ExcitationParams{4, 1.0, snr}, 1000 + static_cast<std::uint64_t>(i)));
  }
  return out;
}

}  // namespace

TEST(ChannelPca, FullBasisReconstructs) {
  for (auto [rows, cols] : {std::pair<int, int>{30, 8}, {6, 20}}) {
    const Eigen::MatrixXd x = gaussian_data(rows, cols, 3);
    const int keep = std::min(rows, cols);
    const auto pca = fit_channel_pca(x, keep);
    EXPECT_TRUE((pca.components.transpose() * pca.components).isIdentity(1e-10));
    const Eigen::MatrixXd centered = x.rowwise() - pca.mean.transpose();
    // wide data spans at most rows - 1 directions, which the kept columns contain
    const Eigen::MatrixXd back = centered * pca.components * pca.components.transpose();
    EXPECT_LT((back - centered).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ChannelPca, CovarianceAndGramRoutesAgree) {
  const Eigen::MatrixXd x = gaussian_data(12, 12, 5);
  const auto cov_route = fit_channel_pca(x, 4);
  const Eigen::MatrixXd wide = x.leftCols(12);
  Eigen::MatrixXd padded(12, 13);
  padded << wide, Eigen::VectorXd::Constant(12, 2.0);  // constant column adds no variance
  const auto gram_route = fit_channel_pca(padded, 4);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(cov_route.eigenvalues(k), gram_route.eigenvalues(k), 1e-9 * cov_route.eigenvalues(0));
    EXPECT_NEAR(std::abs(cov_route.components.col(k).dot(gram_route.components.col(k).head(12))), 1.0, 1e-9);
  }
}

TEST(ChannelPca, ProjectionMatchesBruteForce) {
  const Eigen::MatrixXd x = gaussian_data(25, 10, 8);
  const auto pca = fit_channel_pca(x, 4);
  const Eigen::MatrixXd brute = (x.rowwise() - pca.mean.transpose()) * pca.components;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd p = project_channel(pca, x.row(i).transpose());
    EXPECT_LT((p - brute.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_TRUE(project_channel(pca, pca.mean).isZero(0.0));
  EXPECT_THROW(project_channel(pca, Eigen::VectorXd::Zero(9)), ContractError);
}

TEST(ChannelPca, BesselInequality) {
  const Eigen::MatrixXd x = gaussian_data(25, 10, 9);
  const auto pca = fit_channel_pca(x, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd c = x.row(i).transpose() - pca.mean;
    EXPECT_LE(project_channel(pca, x.row(i).transpose()).squaredNorm(), c.squaredNorm() * (1 + 1e-12));
  }
}

TEST(ChannelPca, EigenvaluesAreProjectedVariances) {
  const Eigen::MatrixXd x = gaussian_data(40, 6, 10);
  const auto pca = fit_channel_pca(x, 6);
  const Eigen::MatrixXd scores = (x.rowwise() - pca.mean.transpose()) * pca.components;
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(scores.col(k).squaredNorm() / 39.0, pca.eigenvalues(k), 1e-10);
}

TEST(ChannelPca, Contracts) {
  EXPECT_THROW(fit_channel_pca(gaussian_data(1, 4, 1), 1), ContractError);
  EXPECT_THROW(fit_channel_pca(gaussian_data(5, 4, 1), 5), ContractError);
  EXPECT_THROW(fit_channel_pca(gaussian_data(5, 4, 1), 0), ContractError);
}

TEST(VarianceExplained, HandCases) {
  ChannelPca pca;
  pca.eigenvalues = Eigen::Vector2d(3, 1);
  EXPECT_DOUBLE_EQ(variance_explained(pca, 1).fraction, 0.75);
  EXPECT_DOUBLE_EQ(variance_explained(pca, 2).fraction, 1.0);
  pca.eigenvalues.setZero();
  EXPECT_TRUE(variance_explained(pca, 1).degenerate);
  EXPECT_THROW(variance_explained(pca, 3), ContractError);
}

TEST(FitBasis, IdenticalSamplesAreDegenerate) {
  const auto one = panel_frfs(1);
  const std::vector<FrfMatrix> same(5, one.front());
  const auto basis = fit_basis(same, ChannelKind::accelerance, 3);
  EXPECT_TRUE(basis.degenerate);
  for (const auto& ch : basis.channels) EXPECT_TRUE(ch.eigenvalues.isZero(0.0));
}

TEST(FitBasis, FingerprintLengthAndCentering) {
  const auto frfs = panel_frfs(20);
  const auto accel = fit_basis(frfs, ChannelKind::accelerance, 7);
  const auto strain = fit_basis(frfs, ChannelKind::strain, 4);
  EXPECT_EQ(accel.channels.size(), 12u);
  EXPECT_EQ(strain.channels.size(), 4u);
  const auto fv = project(frfs[3], accel, strain);
  EXPECT_EQ(fv.values.size(), 100);
  EXPECT_EQ(fv.basis_id, fingerprint_space_id(accel, strain));
  EXPECT_EQ(accel.id, basis_content_hash(accel));
  // projections of the training set have zero mean on every component
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(100);
  for (const auto& f : frfs) sum += project(f, accel, strain).values;
  EXPECT_LT((sum / 20.0).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitBasis, ProjectionMatchesBruteForce) {
  const auto frfs = panel_frfs(12);
  const auto accel = fit_basis(frfs, ChannelKind::accelerance, 7);
  const auto strain = fit_basis(frfs, ChannelKind::strain, 4);
  const auto& pca = accel.channels[2];
  Eigen::MatrixXd x(12, pca.mean.size());
  for (int i = 0; i < 12; ++i) x.row(i) = channel_features(frfs[i], pca, accel.options).transpose();
  const Eigen::MatrixXd brute = (x.rowwise() - pca.mean.transpose()) * pca.components;
  for (int i = 0; i < 12; ++i) {
    const auto fv = project(frfs[i], accel, strain);
    EXPECT_LT((fv.values.segment(14, 7) - brute.row(i).transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FitBasis, RejectsMismatchedInputs) {
  const auto frfs = panel_frfs(6);
  const auto accel = fit_basis(frfs, ChannelKind::accelerance, 3);
  const auto strain = fit_basis(frfs, ChannelKind::strain, 3);
  EXPECT_THROW(project(frfs[0], strain, accel), ContractError);
  FrfMatrix shorter = frfs[0];
  shorter.values = shorter.values.leftCols(64).eval();
  shorter.freq_bins = shorter.freq_bins.head(64).eval();
  EXPECT_THROW(project(shorter, accel, strain), ContractError);
  auto other = fit_basis(std::vector<FrfMatrix>(frfs.begin() + 1, frfs.end()), ChannelKind::accelerance, 3);
  EXPECT_NE(fingerprint_space_id(other, strain), fingerprint_space_id(accel, strain));
}
