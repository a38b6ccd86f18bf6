#include "spinprobe/model.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "spinprobe/error.hpp"

namespace spinprobe {

bool ChainParams::finite() const {
  for (double v : {h1, h2, h3, J1, J2, alpha2, alpha3}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix8 pauli(Pauli which, int site) {
  if (site < 1 || site > kSites) {
    throw Error(ErrorKind::InvalidInput, "site index must be 1, 2 or 3");
  }
  const int bit = 1 << (kSites - site);
  Matrix8 m = Matrix8::Zero();
  for (int col = 0; col < kDim; ++col) {
    const bool down = (col & bit) != 0;
    switch (which) {
      case Pauli::X:
        m(col ^ bit, col) = 1.0;
        break;
      case Pauli::Y:
        // y|up> = i|down>, y|down> = -i|up>
        m(col ^ bit, col) = down ? Complex(0.0, -1.0) : Complex(0.0, 1.0);
        break;
      case Pauli::Z:
        m(col, col) = down ? -1.0 : 1.0;
        break;
    }
  }
  return m;
}

Matrix8 build_hamiltonian(const ChainParams& p) {
  if (!p.finite()) {
    throw Error(ErrorKind::InvalidInput, "chain parameters must be finite");
  }
  Matrix8 h = p.J1 * pauli(Pauli::Z, 1) * pauli(Pauli::Z, 2) +
              p.J2 * pauli(Pauli::Z, 2) * pauli(Pauli::Z, 3);
  h -= p.h1 * pauli(Pauli::X, 1);
  h -= p.h2 * (std::cos(p.alpha2) * pauli(Pauli::X, 2) + std::sin(p.alpha2) * pauli(Pauli::Y, 2));
  h -= p.h3 * (std::cos(p.alpha3) * pauli(Pauli::X, 3) + std::sin(p.alpha3) * pauli(Pauli::Y, 3));
  return h;
}

Matrix8 parity_operator() {
  return pauli(Pauli::X, 1) * pauli(Pauli::X, 2) * pauli(Pauli::X, 3);
}

Matrix8 gauge_rotation(double alpha2, double alpha3) {
  // Diagonal: exp(-i (a2 z2 + a3 z3)) in the product basis.
  const Matrix8 z2 = pauli(Pauli::Z, 2);
  const Matrix8 z3 = pauli(Pauli::Z, 3);
  Matrix8 v = Matrix8::Zero();
  for (int k = 0; k < kDim; ++k) {
    const double phase = alpha2 * z2(k, k).real() + alpha3 * z3(k, k).real();
    v(k, k) = std::polar(1.0, -phase);
  }
  return v;
}

StateVector basis_state(std::span<const SiteState> sites) {
  if (sites.size() != static_cast<std::size_t>(kSites)) {
    throw Error(ErrorKind::InvalidInput,
                "initial state needs exactly 3 site symbols, got " + std::to_string(sites.size()));
  }
  const double r = 1.0 / std::sqrt(2.0);
  StateVector psi = StateVector::Zero();
  for (int k = 0; k < kDim; ++k) {
    Complex amp = 1.0;
    for (int site = 0; site < kSites; ++site) {
      const bool down = (k >> (kSites - 1 - site)) & 1;
      switch (sites[site]) {
        case SiteState::Up: amp *= down ? 0.0 : 1.0; break;
        case SiteState::Down: amp *= down ? 1.0 : 0.0; break;
        case SiteState::Plus: amp *= r; break;
      }
    }
    psi(k) = amp;
  }
  return psi;
}

StateVector basis_state(std::string_view spec) {
  std::vector<SiteState> sites;
  for (char c : spec) {
    switch (c) {
      case 'u': case 'U': sites.push_back(SiteState::Up); break;
      case 'd': case 'D': sites.push_back(SiteState::Down); break;
      case '+': case 'p': sites.push_back(SiteState::Plus); break;
      default:
        throw Error(ErrorKind::InvalidInput,
                    "unknown site symbol '" + std::string(1, c) + "' in initial state '" +
                        std::string(spec) + "'");
    }
  }
  return basis_state(sites);
}

double expectation(const Matrix8& op, const StateVector& psi) {
  return psi.dot(op * psi).real();
}

}  // namespace spinprobe
