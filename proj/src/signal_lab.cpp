#include "frfnet/signal_lab.hpp"

#include <cmath>
#include <random>
#include <string>

#include "frfnet/errors.hpp"
#include "frfnet/fft.hpp"
#include "frfnet/seeds.hpp"

namespace frfnet {

void TimeSignal::validate() const {
  require(is_power_of_two(samples.size()), "time signal: sample count must be a power of two");
  require(dt > 0, "time signal: dt must be positive");
}

TimeSignal gen_white_noise(Eigen::Index n_samples, double sigma, std::uint64_t seed, double dt) {
  if (!is_power_of_two(n_samples))
    throw ContractError("gen_white_noise: n_samples = " + std::to_string(n_samples) + " is not a power of two");
  require(sigma > 0, "gen_white_noise: sigma must be positive");
  require(dt > 0, "gen_white_noise: dt must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  TimeSignal s;
  s.samples.resize(n_samples);
  for (Eigen::Index i = 0; i < n_samples; ++i) s.samples(i) = normal(rng);
  s.dt = dt;
  s.seed = seed;
  return s;
}

Eigen::VectorXcd fft_forward(const TimeSignal& signal) { return fft_forward(signal.samples); }

TimeSignal fft_inverse(const Eigen::VectorXcd& spectrum, double dt) {
  TimeSignal s;
  s.samples = fft_inverse<double>(spectrum).real();
  s.dt = dt;
  return s;
}

double record_dt(const FrequencyGrid& grid) { return 1.0 / (2.0 * grid.f_max); }

ChannelRecords simulate_response(const FrfMatrix& frf, const TimeSignal& input, std::optional<double> snr_db,
                                 std::uint64_t noise_seed) {
  frf.validate();
  input.validate();
  const Eigen::Index n_bins = frf.n_bins();
  const Eigen::Index n = input.size();
  if (n != 2 * n_bins)
    throw ContractError("simulate_response: input has " + std::to_string(n) + " samples, FRF grid needs " +
                        std::to_string(2 * n_bins));
  const double df = frf.freq_bins(1) - frf.freq_bins(0);
  if (std::abs(input.dt * static_cast<double>(n) * df - 1.0) > 1e-9)
    throw ContractError("simulate_response: input sample interval does not match the FRF line spacing");
  if (std::abs(frf.freq_bins(0)) > 1e-12) throw ContractError("simulate_response: FRF grid must start at 0 Hz");

  const Eigen::VectorXcd x = fft_forward(input);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ChannelRecords out;
  out.reserve(static_cast<std::size_t>(frf.n_channels()));
  Eigen::VectorXcd y(n);
  for (Eigen::Index c = 0; c < frf.n_channels(); ++c) {
    y.setZero();
    // DC of a real signal must stay real; the modal FRF is real at 0 Hz.
    y(0) = std::complex<double>(frf.values(c, 0).real() * x(0).real(), 0.0);
    for (Eigen::Index k = 1; k < n_bins; ++k) {
      y(k) = frf.values(c, k) * x(k);
      y(n - k) = std::conj(y(k));
    }
    TimeSignal response = fft_inverse(y, input.dt);
    if (snr_db) {
      const double power = response.samples.squaredNorm() / static_cast<double>(n);
      const double noise_sigma = std::sqrt(power / std::pow(10.0, *snr_db / 10.0));
      for (Eigen::Index i = 0; i < n; ++i) response.samples(i) += noise_sigma * normal(rng);
    }
    response.seed = noise_seed;
    out.push_back(std::move(response));
  }
  return out;
}

FrfMatrix estimate_frf(std::span<const TimeSignal> inputs, std::span<const ChannelRecords> outputs,
                       const std::vector<ChannelKind>& kinds) {
  if (inputs.empty()) throw ContractError("estimate_frf: need at least one record");
  if (inputs.size() != outputs.size()) throw ContractError("estimate_frf: input and output record counts differ");
  const Eigen::Index n = inputs.front().size();
  const double dt = inputs.front().dt;
  const Eigen::Index n_channels = static_cast<Eigen::Index>(outputs.front().size());
  if (n_channels == 0) throw ContractError("estimate_frf: records have no channels");
  if (kinds.size() != static_cast<std::size_t>(n_channels))
    throw ContractError("estimate_frf: channel kind list does not match record channel count");
  const Eigen::Index n_bins = n / 2;

  Eigen::ArrayXd sxx = Eigen::ArrayXd::Zero(n_bins);
  Eigen::MatrixXcd sxy = Eigen::MatrixXcd::Zero(n_channels, n_bins);
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    inputs[r].validate();
    if (inputs[r].size() != n || inputs[r].dt != dt)
      throw ContractError("estimate_frf: all records must share length and dt");
    if (static_cast<Eigen::Index>(outputs[r].size()) != n_channels)
      throw ContractError("estimate_frf: records differ in channel count");
    const Eigen::VectorXcd x = fft_forward(inputs[r]).head(n_bins);
    sxx += x.array().abs2();
    for (Eigen::Index c = 0; c < n_channels; ++c) {
      const TimeSignal& y_signal = outputs[r][static_cast<std::size_t>(c)];
      if (y_signal.size() != n || y_signal.dt != dt)
        throw ContractError("estimate_frf: output record shape does not match its input");
      const Eigen::VectorXcd y = fft_forward(y_signal).head(n_bins);
      sxy.row(c) += (x.conjugate().array() * y.array()).matrix().transpose();
    }
  }
  for (Eigen::Index k = 0; k < n_bins; ++k)
    if (sxx(k) == 0.0)
      throw DataError("estimate_frf: input autospectrum is zero at line " + std::to_string(k) + " (dead bin)");

  FrfMatrix frf;
  frf.values = sxy.array().rowwise() / sxx.transpose().cast<std::complex<double>>();
  const double df = 1.0 / (static_cast<double>(n) * dt);
  frf.freq_bins = Eigen::VectorXd::LinSpaced(n_bins, 0.0, df * static_cast<double>(n_bins - 1));
  frf.channel_kinds = kinds;
  frf.n_averages = static_cast<int>(inputs.size());
  return frf;
}

FrfMatrix measure_frf(const FrfMatrix& true_frf, const ExcitationParams& params, std::uint64_t seed) {
  require(params.n_records >= 1, "measure_frf: need at least one record");
  const double df = true_frf.freq_bins(1) - true_frf.freq_bins(0);
  const Eigen::Index n = 2 * true_frf.n_bins();
  const double dt = 1.0 / (static_cast<double>(n) * df);
  std::vector<TimeSignal> inputs;
  std::vector<ChannelRecords> outputs;
  for (int r = 0; r < params.n_records; ++r) {
    const auto ru = static_cast<std::uint64_t>(r);
    inputs.push_back(gen_white_noise(n, params.sigma, splitmix64(seed + 2 * ru), dt));
    outputs.push_back(simulate_response(true_frf, inputs.back(), params.snr_db, splitmix64(seed + 2 * ru + 1)));
  }
  return estimate_frf(inputs, outputs, true_frf.channel_kinds);
}

}  // namespace frfnet
