#pragma once

// Data-parallel inner loops. Every kernel has a serial reference used by the
// tests and an OpenMP version used by the library; both evaluate the same
// per-element expression, so their outputs agree bit for bit.

#include <array>
#include <span>

#include "spinprobe/model.hpp"

namespace spinprobe {
struct EigenSystem;
}

namespace spinprobe::kernels {

// <psi(t)|O|psi(t)> with psi(t) = sum_j exp(-i e_j t) c_j |v_j>, where c_j and
// O_jk are taken in the eigenbasis.
struct ExpectationModel {
  std::array<double, 8> energies{};
  std::array<Complex, 8> coeffs{};
  Matrix8 observable;
};

ExpectationModel make_expectation_model(const EigenSystem& es, const StateVector& psi0,
                                        const Matrix8& observable);

// out[k] = expectation at t0 + k dt.
void expectation_serial(const ExpectationModel& model, double t0, double dt, std::span<double> out);
void expectation_omp(const ExpectationModel& model, double t0, double dt, std::span<double> out);

// out[k] = |sum_n x[n] exp(-i omega[k] n dt)| / norm. `x` is already windowed.
void direct_dft_serial(std::span<const double> x, double norm, double dt,
                       std::span<const double> omegas, std::span<double> out);
void direct_dft_omp(std::span<const double> x, double norm, double dt,
                    std::span<const double> omegas, std::span<double> out);

}  // namespace spinprobe::kernels
