#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "frfnet/errors.hpp"
#include "frfnet/signal_lab.hpp"

using namespace frfnet;

namespace {

constexpr double kMass = 1.0, kZeta = 0.01;

// Single-dof receptance on a grid whose resonance falls on bin `res_bin`.
FrfMatrix single_dof_frf(const FrequencyGrid& grid, Eigen::Index res_bin) {
  const double wn = 2 * std::numbers::pi * grid.df() * static_cast<double>(res_bin);
  const double k = kMass * wn * wn;
  FrfMatrix frf;
  frf.freq_bins = grid.frequencies();
  frf.channel_kinds = {ChannelKind::accelerance};
  frf.values.resize(1, grid.n_bins);
  for (Eigen::Index b = 0; b < grid.n_bins; ++b) {
    const double w = 2 * std::numbers::pi * frf.freq_bins(b);
    frf.values(0, b) = 1.0 / std::complex<double>(k - kMass * w * w, 2 * kZeta * std::sqrt(k * kMass) * w);
  }
  return frf;
}

double max_interior_rel_error(const FrfMatrix& est, const FrfMatrix& truth) {
  double worst = 0.0;
  for (Eigen::Index b = 1; b < truth.n_bins(); ++b)
    worst = std::max(worst, std::abs(est.values(0, b) - truth.values(0, b)) / std::abs(truth.values(0, b)));
  return worst;
}

const FrequencyGrid kGrid{1000.0, 2048};

}  // namespace

TEST(WhiteNoise, Deterministic) {
  EXPECT_EQ(gen_white_noise(256, 1.0, 5).samples, gen_white_noise(256, 1.0, 5).samples);
  EXPECT_NE(gen_white_noise(256, 1.0, 5).samples, gen_white_noise(256, 1.0, 6).samples);
}

TEST(WhiteNoise, Statistics) {
  const Eigen::Index n = 1 << 17;
  const auto s = gen_white_noise(n, 1.0, 42);
  const double mean = s.samples.mean();
  const double var = (s.samples.array() - mean).square().sum() / static_cast<double>(n - 1);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_GE(var, 0.97);
  EXPECT_LE(var, 1.03);
}

TEST(WhiteNoise, Contracts) {
  EXPECT_THROW(gen_white_noise(1000, 1.0, 1), ContractError);
  EXPECT_THROW(gen_white_noise(1024, 0.0, 1), ContractError);
  EXPECT_EQ(ExcitationParams{}.n_records, 10);
}

TEST(SimulateResponse, ZeroInputGivesZeroResponse) {
  const auto frf = single_dof_frf(kGrid, 200);
  TimeSignal zero{Eigen::VectorXd::Zero(2 * kGrid.n_bins), record_dt(kGrid), 0};
  const auto out = simulate_response(frf, zero, std::nullopt, 1);
  EXPECT_TRUE(out[0].samples.isZero(0.0));
}

TEST(SimulateResponse, NoiselessSpectrumRatio) {
  const auto frf = single_dof_frf(kGrid, 200);
  const auto x = gen_white_noise(2 * kGrid.n_bins, 1.0, 3, record_dt(kGrid));
  const auto y = simulate_response(frf, x, std::nullopt, 1);
  const Eigen::VectorXcd fx = fft_forward(x), fy = fft_forward(y[0]);
  double worst = 0.0;
  for (Eigen::Index b = 1; b < kGrid.n_bins; ++b)
    worst = std::max(worst, std::abs(fy(b) / fx(b) - frf.values(0, b)) / std::abs(frf.values(0, b)));
  EXPECT_LT(worst, 1e-8);
}

TEST(SimulateResponse, SnrSetsNoisePower) {
  const FrequencyGrid grid{1000.0, 1 << 14};
  const auto frf = single_dof_frf(grid, 1600);
  const auto x = gen_white_noise(2 * grid.n_bins, 1.0, 4, record_dt(grid));
  const auto clean = simulate_response(frf, x, std::nullopt, 9);
  const auto noisy = simulate_response(frf, x, 20.0, 9);
  const double signal_power = clean[0].samples.squaredNorm();
  const double noise_power = (noisy[0].samples - clean[0].samples).squaredNorm();
  EXPECT_NEAR(noise_power / (signal_power / 100.0), 1.0, 0.05);
}

TEST(SimulateResponse, RejectsMismatchedRecord) {
  const auto frf = single_dof_frf(kGrid, 200);
  EXPECT_THROW(simulate_response(frf, gen_white_noise(1024, 1.0, 1, record_dt(kGrid)), std::nullopt, 1), ContractError);
  EXPECT_THROW(simulate_response(frf, gen_white_noise(4096, 1.0, 1, 1e-3), std::nullopt, 1), ContractError);
}

TEST(EstimateFrf, NoiselessSingleRecord) {
  const auto frf = single_dof_frf(kGrid, 200);
  std::vector<TimeSignal> in{gen_white_noise(2 * kGrid.n_bins, 1.0, 11, record_dt(kGrid))};
  std::vector<ChannelRecords> out{simulate_response(frf, in[0], std::nullopt, 1)};
  const auto est = estimate_frf(in, out, frf.channel_kinds);
  EXPECT_EQ(est.n_averages, 1);
  EXPECT_TRUE(est.freq_bins.isApprox(frf.freq_bins));
  EXPECT_LT(max_interior_rel_error(est, frf), 1e-8);
}

TEST(EstimateFrf, ScaleInvariance) {
  const auto frf = single_dof_frf(kGrid, 200);
  auto x = gen_white_noise(2 * kGrid.n_bins, 1.0, 11, record_dt(kGrid));
  std::vector<TimeSignal> in{x};
  std::vector<ChannelRecords> out{simulate_response(frf, x, std::nullopt, 1)};
  const auto a = estimate_frf(in, out, frf.channel_kinds);
  in[0].samples *= 7.5;
  for (auto& ch : out[0]) ch.samples *= 7.5;
  const auto b = estimate_frf(in, out, frf.channel_kinds);
  EXPECT_LT(max_interior_rel_error(b, a), 1e-10);
}

TEST(EstimateFrf, DeadBin) {
  const auto frf = single_dof_frf(kGrid, 200);
  std::vector<TimeSignal> in{TimeSignal{Eigen::VectorXd::Zero(2 * kGrid.n_bins), record_dt(kGrid), 0}};
  std::vector<ChannelRecords> out{simulate_response(frf, in[0], std::nullopt, 1)};
  EXPECT_THROW(estimate_frf(in, out, frf.channel_kinds), DataError);
}

TEST(MeasureFrf, TenRecordsAtTwentyDbNearResonance) {
  const Eigen::Index res = 200;
  const auto frf = single_dof_frf(kGrid, res);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto est = measure_frf(frf, ExcitationParams{10, 1.0, 20.0}, seed);
    for (Eigen::Index b = res - 1; b <= res + 1; ++b) {
      const double err = std::abs(std::abs(est.values(0, b)) / std::abs(frf.values(0, b)) - 1.0);
      EXPECT_LT(err, 0.05) << "seed " << seed << " bin " << b;
    }
  }
}

TEST(MeasureFrf, MoreAveragesReduceError) {
  const Eigen::Index res = 200;
  const auto frf = single_dof_frf(kGrid, res);
  auto band_error = [&](int records) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto est = measure_frf(frf, ExcitationParams{records, 1.0, 20.0}, seed);
      for (Eigen::Index b = 1; b < kGrid.n_bins; ++b)
        sum += std::abs(est.values(0, b) - frf.values(0, b)) / std::abs(frf.values(0, b));
    }
    return sum;
  };
  EXPECT_LT(band_error(10), band_error(2));
}

TEST(MeasureFrf, Deterministic) {
  const auto frf = single_dof_frf(kGrid, 200);
  const auto a = measure_frf(frf, ExcitationParams{}, 77);
  const auto b = measure_frf(frf, ExcitationParams{}, 77);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.n_averages, 10);
}
