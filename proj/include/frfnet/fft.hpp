#pragma once

// Iterative radix-2 Cooley-Tukey transform.
//
// Convention: forward X_k = sum_n x_n exp(-2 pi i k n / N), inverse carries the
// 1/N factor, so sum |x|^2 = (1/N) sum |X|^2.

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "frfnet/errors.hpp"

namespace frfnet {

template <typename Scalar>
using ComplexVectorX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

constexpr bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

template <typename Scalar>
void fft_inplace(ComplexVectorX<Scalar>& data, bool inverse) {
  const Eigen::Index n = data.size();
  if (!is_power_of_two(n))
    throw ContractError("fft: length " + std::to_string(n) + " is not a power of two");

  for (Eigen::Index i = 1, j = 0; i < n; ++i) {
    Eigen::Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data(i), data(j));
  }

  const Scalar sign = inverse ? Scalar(1) : Scalar(-1);
  // twiddles are evaluated directly rather than by recurrence to keep
  // round-off at the 1e-15 level for long transforms
  const Eigen::Index half_n = n / 2;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> wr(half_n), wi(half_n);
  for (Eigen::Index k = 0; k < half_n; ++k) {
    const Scalar angle = sign * Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k) / Scalar(n);
    wr(k) = std::cos(angle);
    wi(k) = std::sin(angle);
  }
  auto* z = reinterpret_cast<Scalar*>(data.data());
  for (Eigen::Index len = 2; len <= n; len <<= 1) {
    const Eigen::Index half = len / 2;
    const Eigen::Index stride = n / len;
    for (Eigen::Index start = 0; start < n; start += len) {
      for (Eigen::Index k = 0; k < half; ++k) {
        const Scalar c = wr(k * stride);
        const Scalar d = wi(k * stride);
        Scalar* u = z + 2 * (start + k);
        Scalar* v = z + 2 * (start + k + half);
        const Scalar tr = c * v[0] - d * v[1];
        const Scalar ti = c * v[1] + d * v[0];
        v[0] = u[0] - tr;
        v[1] = u[1] - ti;
        u[0] += tr;
        u[1] += ti;
      }
    }
  }
  if (inverse) data /= Scalar(n);
}

template <typename Derived>
ComplexVectorX<typename Derived::RealScalar> fft_forward(const Eigen::MatrixBase<Derived>& signal) {
  using Scalar = typename Derived::RealScalar;
  ComplexVectorX<Scalar> data = signal.template cast<std::complex<Scalar>>();
  fft_inplace(data, false);
  return data;
}

template <typename Scalar>
ComplexVectorX<Scalar> fft_inverse(ComplexVectorX<Scalar> spectrum) {
  fft_inplace(spectrum, true);
  return spectrum;
}

}  // namespace frfnet
