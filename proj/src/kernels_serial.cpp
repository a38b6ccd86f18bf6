#include "kernels_common.hpp"
#include "spinprobe/spectral.hpp"

namespace spinprobe::kernels {

ExpectationModel make_expectation_model(const EigenSystem& es, const StateVector& psi0,
                                        const Matrix8& observable) {
  ExpectationModel m;
  const StateVector c = es.vectors.adjoint() * psi0;
  for (int j = 0; j < 8; ++j) {
    m.energies[j] = es.eps[j];
    m.coeffs[j] = c(j);
  }
  m.observable = es.vectors.adjoint() * observable * es.vectors;
  return m;
}

void expectation_serial(const ExpectationModel& model, double t0, double dt, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = detail::expectation_at(model, t0 + dt * static_cast<double>(k));
  }
}

void direct_dft_serial(std::span<const double> x, double norm, double dt,
                       std::span<const double> omegas, std::span<double> out) {
  for (std::size_t k = 0; k < omegas.size(); ++k) out[k] = detail::dft_at(x, norm, dt, omegas[k]);
}

}  // namespace spinprobe::kernels
