#include <omp.h>

#include "kernels_common.hpp"

namespace spinprobe::kernels {

void expectation_omp(const ExpectationModel& model, double t0, double dt, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = detail::expectation_at(model, t0 + dt * static_cast<double>(k));
  }
}

void direct_dft_omp(std::span<const double> x, double norm, double dt,
                    std::span<const double> omegas, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(omegas.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = detail::dft_at(x, norm, dt, omegas[k]);
}

}  // namespace spinprobe::kernels
