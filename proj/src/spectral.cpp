#include "spinprobe/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spinprobe/error.hpp"

namespace spinprobe {

namespace {

void require_hermitian(const Matrix8& h) {
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  const double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
  if (!std::isfinite(asym) || asym > 1e-12 * scale) {
    throw Error(ErrorKind::InvalidInput, "Hamiltonian is not Hermitian (max |H - H^dagger| = " +
                                             std::to_string(asym) + ")");
  }
}

void build_projectors(EigenSystem& es) {
  es.clusters.clear();
  std::array<int, 8> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return es.eps[a] > es.eps[b]; });

  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && es.eps[order[i]] - es.eps[order[j]] <= es.cluster_tol) ++j;
    EnergyCluster c;
    c.multiplicity = static_cast<int>(j - i);
    c.projector = Matrix8::Zero();
    double sum = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      const auto v = es.vectors.col(order[k]);
      c.projector += v * v.adjoint();
      sum += es.eps[order[k]];
      es.cluster_of[order[k]] = static_cast<int>(es.clusters.size());
    }
    c.energy = sum / c.multiplicity;
    es.clusters.push_back(std::move(c));
    i = j;
  }
  for (int k = 0; k < 8; ++k) es.projs[k] = es.clusters[es.cluster_of[k]].projector;
}

}  // namespace

EigenSystem diagonalize(const Matrix8& h) {
  require_hermitian(h);
  Eigen::SelfAdjointEigenSolver<Matrix8> solver(h);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidInput, "eigensolver did not converge");
  }
  EigenSystem es;
  const auto& values = solver.eigenvalues();
  for (int k = 0; k < 8; ++k) {
    es.eps[k] = values(7 - k);
    es.vectors.col(k) = solver.eigenvectors().col(7 - k);
  }
  es.labeling = Labeling::SortedDescending;
  es.cluster_tol = cluster_tolerance(std::max(std::abs(es.eps[0]), std::abs(es.eps[7])));
  build_projectors(es);
  return es;
}

EigenSystem diagonalize(const ChainParams& p, Labeling labeling) {
  EigenSystem es = diagonalize(build_hamiltonian(p));
  if (labeling == Labeling::SortedDescending) return es;

  const ClosedFormEnergies cf = closed_form_energies(p);
  const std::array<double, 8> target{cf.eps[0], cf.eps[1], cf.eps[2], cf.eps[3],
                                     -cf.eps[3], -cf.eps[2], -cf.eps[1], -cf.eps[0]};
  std::array<bool, 8> used{};
  std::array<int, 8> pick{};
  double worst = 0.0;
  for (int j = 0; j < 8; ++j) {
    int best = -1;
    for (int k = 0; k < 8; ++k) {
      if (used[k]) continue;
      if (best < 0 || std::abs(es.eps[k] - target[j]) < std::abs(es.eps[best] - target[j])) best = k;
    }
    used[best] = true;
    pick[j] = best;
    worst = std::max(worst, std::abs(es.eps[best] - target[j]));
  }
  if (worst > 1e-6 * (1.0 + std::abs(es.eps[0]))) {
    throw Error(ErrorKind::BranchFailure,
                "closed-form energies disagree with the numerical spectrum by " + std::to_string(worst));
  }

  EigenSystem out;
  out.labeling = Labeling::ClosedForm;
  out.cluster_tol = es.cluster_tol;
  for (int j = 0; j < 8; ++j) {
    out.eps[j] = es.eps[pick[j]];
    out.vectors.col(j) = es.vectors.col(pick[j]);
  }
  build_projectors(out);
  return out;
}

double sqrt_det_polynomial(const ChainParams& p) {
  const double h1s = p.h1 * p.h1, h2s = p.h2 * p.h2, h3s = p.h3 * p.h3;
  const double j1s = p.J1 * p.J1, j2s = p.J2 * p.J2;
  const double t = h3s - j1s + j2s;
  return h1s * h1s + h2s * h2s + t * t - 2.0 * h1s * (h2s + h3s - j1s + j2s) +
         2.0 * h2s * (-h3s + j1s + j2s);
}

ClosedFormEnergies closed_form_energies(const ChainParams& p) {
  if (!p.finite()) throw Error(ErrorKind::InvalidInput, "chain parameters must be finite");
  if (p.alpha2 != 0.0 || p.alpha3 != 0.0) {
    throw Error(ErrorKind::InvalidInput, "closed-form energies need the canonical gauge");
  }
  using C = Complex;
  const double S = p.h1 * p.h1 + p.h2 * p.h2 + p.h3 * p.h3 + p.J1 * p.J1 + p.J2 * p.J2;
  const double sd = sqrt_det_polynomial(p);
  const double hhh = p.h1 * p.h2 * p.h3;
  const double X = 16.0 * (-S * S * S + 9.0 * S * sd + 108.0 * hhh * hhh);
  const double q = S * S + 3.0 * sd;
  const double B = std::pow(2.0, 7.0 / 3.0) * q;
  const C A = std::pow(C(X) + std::sqrt(C(-256.0 * q * q * q + X * X)), 1.0 / 3.0);
  if (std::abs(A) == 0.0) {
    // Only happens for the all-zero chain.
    if (S == 0.0) return {};
    throw Error(ErrorKind::BranchFailure, "cube-root branch vanished");
  }
  const double cbrt2 = std::cbrt(2.0);
  const C alpha = std::sqrt((4.0 * S + B / A + A / cbrt2) / 3.0);
  const C beta = (8.0 * S - B / A - A / cbrt2) / 3.0;
  const C gamma = std::abs(alpha) == 0.0 ? C(0.0) : 16.0 * hhh / alpha;
  const C rp = std::sqrt(beta + gamma);
  const C rm = std::sqrt(beta - gamma);
  const std::array<C, 4> e{alpha / 2.0 + rp / 2.0, alpha / 2.0 + rm / 2.0, alpha / 2.0 - rm / 2.0,
                           alpha / 2.0 - rp / 2.0};

  ClosedFormEnergies out;
  for (int k = 0; k < 4; ++k) {
    out.eps[k] = e[k].real();
    out.max_imag = std::max(out.max_imag, std::abs(e[k].imag()));
  }
  out.alpha = alpha.real();
  out.beta = beta.real();
  out.gamma = gamma.real();
  if (!std::isfinite(out.max_imag) || out.max_imag > 1e-6) {
    throw Error(ErrorKind::BranchFailure,
                "closed-form energies left the real axis (imaginary residue " +
                    std::to_string(out.max_imag) + ")");
  }
  return out;
}

ZeroFieldBlocks zero_field_blocks(const ChainParams& p) {
  if (p.h1 != 0.0) throw Error(ErrorKind::InvalidInput, "zero-field blocks need h1 = 0");
  if (p.alpha2 != 0.0 || p.alpha3 != 0.0) {
    throw Error(ErrorKind::InvalidInput, "zero-field blocks need the canonical gauge");
  }
  const double J1 = p.J1, J2 = p.J2, h2 = p.h2, h3 = p.h3;
  ZeroFieldBlocks b;
  b.up << J1 + J2, -h3, -h2, 0.0,
          -h3, J1 - J2, 0.0, -h2,
          -h2, 0.0, -J1 - J2, -h3,
          0.0, -h2, -h3, -J1 + J2;
  b.down << -J1 + J2, -h3, -h2, 0.0,
            -h3, -J1 - J2, 0.0, -h2,
            -h2, 0.0, J1 - J2, -h3,
            0.0, -h2, -h3, J1 + J2;
  return b;
}

ZeroFieldSpectrum zero_field_spectrum(const ChainParams& p) {
  ZeroFieldSpectrum z;
  const double h2s = p.h2 * p.h2, h3s = p.h3 * p.h3, j1s = p.J1 * p.J1, j2s = p.J2 * p.J2;
  z.S0 = h2s + h3s + j1s + j2s;
  z.C0 = h2s * h3s + h3s * j1s + j1s * j2s;
  const double root = 2.0 * std::sqrt(z.C0);
  z.eps_I = std::sqrt(z.S0 + root);
  z.eps_II = std::sqrt(std::max(0.0, z.S0 - root));
  return z;
}

Eigen::Matrix4cd parity_sector(const Matrix8& h, int parity) {
  if (parity != 1 && parity != -1) throw Error(ErrorKind::InvalidInput, "parity must be +1 or -1");
  Eigen::Matrix<Complex, 8, 4> basis = Eigen::Matrix<Complex, 8, 4>::Zero();
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 4; ++i) {
    basis(i, i) = r;
    basis(7 - i, i) = parity * r;
  }
  return basis.adjoint() * h * basis;
}

StateVector lift_sector_vector(const Eigen::Vector4cd& v, int parity) {
  StateVector out = StateVector::Zero();
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 4; ++i) {
    out(i) += r * v(i);
    out(7 - i) += static_cast<double>(parity) * r * v(i);
  }
  return out;
}

LevelCrossing find_level_crossing(const ChainParams& base, double lo, double hi, int scan_points) {
  auto det_even = [&](double h1) {
    return parity_sector(build_hamiltonian(base.with_h1(h1)), 1).determinant().real();
  };
  double a = lo, fa = det_even(lo);
  bool found = false;
  double b = hi;
  for (int k = 1; k <= scan_points; ++k) {
    const double x = lo + (hi - lo) * k / scan_points;
    const double fx = det_even(x);
    if (fx == 0.0 || (fa < 0.0) != (fx < 0.0)) {
      b = x;
      found = true;
      break;
    }
    a = x;
    fa = fx;
  }
  if (!found) {
    throw Error(ErrorKind::InvalidInput, "no zero-energy level crossing in the requested h1 range");
  }
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = det_even(m);
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }

  LevelCrossing out;
  out.h1 = 0.5 * (a + b);
  const Matrix8 h = build_hamiltonian(base.with_h1(out.h1));
  for (int parity : {1, -1}) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> s(parity_sector(h, parity));
    Eigen::Index k = 0;
    s.eigenvalues().cwiseAbs().minCoeff(&k);
    const StateVector v = lift_sector_vector(s.eigenvectors().col(k), parity);
    if (parity == 1) {
      out.energy_even = s.eigenvalues()(k);
      out.even_state = v;
    } else {
      out.energy_odd = s.eigenvalues()(k);
      out.odd_state = v;
    }
  }
  return out;
}

}  // namespace spinprobe
