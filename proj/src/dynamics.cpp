#include "spinprobe/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "spinprobe/error.hpp"
#include "spinprobe/kernels.hpp"

namespace spinprobe {

namespace {

void require_normalized(const StateVector& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) {
    throw Error(ErrorKind::InvalidInput, "initial state must be normalized");
  }
}

const Matrix8& sx1() {
  static const Matrix8 op = pauli(Pauli::X, 1);
  return op;
}

}  // namespace

TimeGrid TimeGrid::until(double tmax, double dt) {
  if (!(dt > 0.0) || !(tmax > 0.0)) throw Error(ErrorKind::InvalidInput, "need tmax > 0 and dt > 0");
  TimeGrid g;
  g.dt = dt;
  g.count = static_cast<std::size_t>(std::floor(tmax / dt + 0.5)) + 1;
  return g;
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t0)) {
    throw Error(ErrorKind::InvalidInput, "time grid needs a finite dt > 0");
  }
  if (count < 2) throw Error(ErrorKind::InvalidInput, "time grid needs at least 2 samples");
}

void TimeTrace::validate() const {
  grid().validate();
  if (noise_sigma < 0.0) throw Error(ErrorKind::InvalidInput, "noise sigma must be >= 0");
}

StateVector evolve(const Matrix8& h, const StateVector& psi0, double t) {
  require_normalized(psi0);
  if (t == 0.0) return psi0;
  const EigenSystem es = diagonalize(h);
  StateVector out = StateVector::Zero();
  for (const auto& c : es.clusters) out += std::polar(1.0, -c.energy * t) * (c.projector * psi0);
  return out;
}

TimeTrace trace_sx1(const ChainParams& p, const StateVector& psi0, const TimeGrid& grid,
                    NoiseSpec noise, Backend backend) {
  grid.validate();
  require_normalized(psi0);
  if (noise.sigma < 0.0) throw Error(ErrorKind::InvalidInput, "noise sigma must be >= 0");

  const EigenSystem es = diagonalize(p);
  const auto model = kernels::make_expectation_model(es, psi0, sx1());

  TimeTrace trace;
  trace.t0 = grid.t0;
  trace.dt = grid.dt;
  trace.noise_sigma = noise.sigma;
  trace.seed = noise.seed;
  trace.samples.resize(grid.count);
  if (backend == Backend::Serial) {
    kernels::expectation_serial(model, grid.t0, grid.dt, trace.samples);
  } else {
    kernels::expectation_omp(model, grid.t0, grid.dt, trace.samples);
  }
  if (noise.sigma > 0.0) {
    std::mt19937_64 gen(noise.seed);
    std::normal_distribution<double> dist(0.0, noise.sigma);
    for (double& s : trace.samples) s += dist(gen);
  }
  return trace;
}

double LineSpectrum::total() const {
  double s = dc;
  for (const auto& l : lines) s += l.amplitude;
  return s;
}

double LineSpectrum::amplitude_at(double omega, double tol) const {
  if (std::abs(omega) <= tol) return dc;
  double s = 0.0;
  for (const auto& l : lines) {
    if (std::abs(l.omega - std::abs(omega)) <= tol) s += l.amplitude;
  }
  return s;
}

double LineSpectrum::evaluate(double t) const {
  double s = dc;
  for (const auto& l : lines) s += l.amplitude * std::cos(l.omega * t);
  return s;
}

LineSpectrum analytic_spectrum(const EigenSystem& es, const StateVector& psi0) {
  require_normalized(psi0);
  const auto& cl = es.clusters;
  const std::size_t n = cl.size();
  std::vector<StateVector> proj_psi(n);
  for (std::size_t a = 0; a < n; ++a) proj_psi[a] = cl[a].projector * psi0;

  LineSpectrum out;
  out.initial_state = psi0;
  out.merge_tol = es.cluster_tol;

  struct Term {
    double omega, cos_amp, sin_amp;
  };
  std::vector<Term> terms;
  Complex dc = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const StateVector xb = sx1() * proj_psi[a];
    dc += proj_psi[a].dot(xb);
    for (std::size_t b = 0; b < a; ++b) {
      // clusters are descending, so E_b > E_a; the pair contributes
      // M_ba e^{i w t} + M_ab e^{-i w t} with w = E_b - E_a.
      const Complex m_ba = proj_psi[b].dot(xb);
      terms.push_back({cl[b].energy - cl[a].energy, 2.0 * m_ba.real(), -2.0 * m_ba.imag()});
    }
  }
  out.dc = dc.real();
  out.max_imag_residue = std::abs(dc.imag());

  std::sort(terms.begin(), terms.end(), [](const Term& x, const Term& y) { return x.omega < y.omega; });
  std::size_t i = 0;
  while (i < terms.size()) {
    std::size_t j = i + 1;
    while (j < terms.size() && terms[j].omega - terms[j - 1].omega <= out.merge_tol) ++j;
    double c = 0.0, s = 0.0, w = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      c += terms[k].cos_amp;
      s += terms[k].sin_amp;
      w += terms[k].omega;
    }
    out.max_imag_residue = std::max(out.max_imag_residue, std::abs(s));
    if (std::abs(c) >= kLineDropThreshold) {
      out.lines.push_back({w / static_cast<double>(j - i), c});
    }
    i = j;
  }
  return out;
}

LineSpectrum analytic_spectrum(const ChainParams& p, const StateVector& psi0) {
  return analytic_spectrum(diagonalize(p), psi0);
}

ZeroFieldAmplitudes zero_field_amplitudes(const ChainParams& p) {
  const ZeroFieldSpectrum z = zero_field_spectrum(p);
  const double denom = 2.0 * z.eps_I * z.eps_II * z.C0;
  if (!(denom > 1e-300) || !std::isfinite(denom)) {
    throw Error(ErrorKind::DegenerateChain,
                "zero-field amplitudes undefined: eps_I * eps_II * C0 vanishes");
  }
  const double h2s = p.h2 * p.h2, h3s = p.h3 * p.h3, j1s = p.J1 * p.J1, j2s = p.J2 * p.J2;
  const double ee = z.eps_I * z.eps_II;
  const double u = h2s * (h3s - j2s);
  const double v = (h3s + j2s) * (h3s - j1s + j2s);
  const double w = (j2s + h3s) * ee;
  ZeroFieldAmplitudes out;
  out.C = h2s * h3s / z.C0;
  out.A0 = j1s * (u - v + w) / denom;
  out.B0 = j1s * (-u + v + w) / denom;
  return out;
}

PairAmplitudes pair_amplitudes(const EigenSystem& es, const StateVector& psi0) {
  require_normalized(psi0);
  // M(j,k) = <psi0|P_j x1 P_k|psi0>, rank-one projectors from the labeled
  // eigenvectors.
  const StateVector c = es.vectors.adjoint() * psi0;
  const Matrix8 x = es.vectors.adjoint() * sx1() * es.vectors;
  auto M = [&](int j, int k) {  // 1-based labels
    return (std::conj(c(j - 1)) * x(j - 1, k - 1) * c(k - 1)).real();
  };
  auto bar = [](int j) { return 9 - j; };

  PairAmplitudes out;
  for (int j = 1; j <= 8; ++j) out.C += M(j, j);
  for (int m = 1; m <= 4; ++m) {
    out.A_diag[m] = M(m, bar(m)) + M(bar(m), m);
    for (int n = 1; n < m; ++n) {
      out.A[m][n] = M(m, bar(n)) + M(bar(n), m) + M(n, bar(m)) + M(bar(m), n);
      out.B[m][n] = M(m, n) + M(n, m) + M(bar(m), bar(n)) + M(bar(n), bar(m));
    }
  }
  return out;
}

}  // namespace spinprobe
