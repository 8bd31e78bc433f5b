#pragma once

// Random excitation, frequency-domain response synthesis and H1 FRF
// estimation from time records.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "frfnet/frf.hpp"
#include "frfnet/panel_model.hpp"

namespace frfnet {

struct TimeSignal {
  Eigen::VectorXd samples;
  double dt = 0.0;  // s
  std::uint64_t seed = 0;

  Eigen::Index size() const { return samples.size(); }
  void validate() const;
};

/// One record of all measurement channels.
using ChannelRecords = std::vector<TimeSignal>;

/// Zero-mean Gaussian samples with standard deviation `sigma`.
TimeSignal gen_white_noise(Eigen::Index n_samples, double sigma, std::uint64_t seed, double dt = 1.0);

Eigen::VectorXcd fft_forward(const TimeSignal& signal);
/// Real part of the inverse transform.
TimeSignal fft_inverse(const Eigen::VectorXcd& spectrum, double dt);

/// Sample interval matching a grid: records of 2 * n_bins samples at this
/// interval put FFT line k exactly on grid bin k.
double record_dt(const FrequencyGrid& grid);

/// Filters `input` through every channel of `frf` in the frequency domain and
/// optionally adds Gaussian measurement noise at `snr_db` per channel.
/// The input must have 2 * n_bins samples at dt = 1 / (2 f_max); the Nyquist
/// line, which the FRF grid does not carry, is zeroed.
ChannelRecords simulate_response(const FrfMatrix& frf, const TimeSignal& input, std::optional<double> snr_db,
                                 std::uint64_t noise_seed);

/// H1 estimate  sum_r conj(X_r) Y_r / sum_r |X_r|^2  on lines 0 .. n/2 - 1.
/// Throws DataError naming the first line whose summed input autospectrum is
/// zero.
FrfMatrix estimate_frf(std::span<const TimeSignal> inputs, std::span<const ChannelRecords> outputs,
                       const std::vector<ChannelKind>& kinds = default_channel_kinds());

struct ExcitationParams {
  int n_records = 10;
  double sigma = 1.0;  // N
  std::optional<double> snr_db = 20.0;
};

/// Full virtual measurement: n_records white-noise excitations, noisy
/// responses and the averaged H1 estimate. Record r draws its excitation from
/// splitmix64(seed + 2r) and its measurement noise from splitmix64(seed + 2r + 1).
FrfMatrix measure_frf(const FrfMatrix& true_frf, const ExcitationParams& params, std::uint64_t seed);

}  // namespace frfnet
