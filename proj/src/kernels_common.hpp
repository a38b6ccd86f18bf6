#pragma once

#include <cmath>
#include <span>

#include "spinprobe/kernels.hpp"

namespace spinprobe::kernels::detail {

inline double expectation_at(const ExpectationModel& m, double t) {
  std::array<Complex, 8> a;
  for (int j = 0; j < 8; ++j) a[j] = std::polar(1.0, -m.energies[j] * t) * m.coeffs[j];
  double acc = 0.0;
  for (int j = 0; j < 8; ++j) {
    Complex row = 0.0;
    for (int k = 0; k < 8; ++k) row += m.observable(j, k) * a[k];
    acc += (std::conj(a[j]) * row).real();
  }
  return acc;
}

inline double dft_at(std::span<const double> x, double norm, double dt, double omega) {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double phase = omega * dt * static_cast<double>(n);
    re += x[n] * std::cos(phase);
    im -= x[n] * std::sin(phase);
  }
  return std::hypot(re, im) / norm;
}

}  // namespace spinprobe::kernels::detail
