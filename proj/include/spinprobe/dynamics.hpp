#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spinprobe/model.hpp"
#include "spinprobe/spectral.hpp"

namespace spinprobe {

// Uniform sampling grid t_k = t0 + k dt, k = 0..count-1. Times are in units
// of inverse energy (hbar = 1).
struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.01;
  std::size_t count = 0;

  // [0, tmax] inclusive.
  static TimeGrid until(double tmax, double dt);
  void validate() const;
  double duration() const { return dt * static_cast<double>(count); }
};

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 42;
};

struct TimeTrace {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> samples;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  // Observation window T = N dt.
  double duration() const { return dt * static_cast<double>(samples.size()); }
  TimeGrid grid() const { return {t0, dt, samples.size()}; }
  void validate() const;
};

enum class Backend { Serial, OpenMP };

// exp(-i H t) psi0 via the spectral projectors of H.
StateVector evolve(const Matrix8& h, const StateVector& psi0, double t);

// Samples <x1(t)> plus i.i.d. Gaussian noise drawn from a seeded mt19937_64.
TimeTrace trace_sx1(const ChainParams& p, const StateVector& psi0, const TimeGrid& grid,
                    NoiseSpec noise = {}, Backend backend = Backend::OpenMP);

struct Line {
  double omega = 0.0;
  double amplitude = 0.0;  // coefficient of cos(omega t)
};

// <x1(t)> = dc + sum_lines amplitude cos(omega t), exactly.
struct LineSpectrum {
  std::vector<Line> lines;  // omega strictly increasing, omega > 0
  double dc = 0.0;
  StateVector initial_state;
  double max_imag_residue = 0.0;  // largest sin(omega t) coefficient seen
  double merge_tol = 0.0;

  double total() const;
  // Sum of the amplitudes of lines within tol of omega (0 when none).
  double amplitude_at(double omega, double tol) const;
  double evaluate(double t) const;
};

inline constexpr double kLineDropThreshold = 1e-10;

LineSpectrum analytic_spectrum(const EigenSystem& es, const StateVector& psi0);
LineSpectrum analytic_spectrum(const ChainParams& p, const StateVector& psi0);

// C, A0_{II,I}, B0_{II,I} for |+ up up> at h1 = 0, from the closed forms.
struct ZeroFieldAmplitudes {
  double C = 0.0;
  double A0 = 0.0;  // at eps_I + eps_II
  double B0 = 0.0;  // at eps_I - eps_II
};

ZeroFieldAmplitudes zero_field_amplitudes(const ChainParams& p);

// Amplitudes attached to labeled eigenvalue pairs (1-based m > n):
//   A[m][n] multiplies cos((eps_m + eps_n) t), B[m][n] cos((eps_m - eps_n) t).
// Needs a non-degenerate spectrum; the labeling of `es` decides which pair is
// which.
struct PairAmplitudes {
  double C = 0.0;
  std::array<std::array<double, 5>, 5> A{};
  std::array<std::array<double, 5>, 5> B{};
  std::array<double, 5> A_diag{};  // A[m][m], cos(2 eps_m t)
};

PairAmplitudes pair_amplitudes(const EigenSystem& es, const StateVector& psi0);

}  // namespace spinprobe
