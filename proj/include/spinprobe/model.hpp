#pragma once

#include <complex>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace spinprobe {

using Complex = std::complex<double>;
using Matrix8 = Eigen::Matrix<Complex, 8, 8>;
using StateVector = Eigen::Matrix<Complex, 8, 1>;

inline constexpr int kSites = 3;
inline constexpr int kDim = 8;

// Three-spin Ising chain in site-dependent transverse fields.
//
//   H = J1 z1 z2 + J2 z2 z3 - h1 x1 - h2 (cos a2 x2 + sin a2 y2)
//                                   - h3 (cos a3 x3 + sin a3 y3)
//
// The in-plane angles a2, a3 only exist to check that <x1(t)> does not depend
// on them; the canonical gauge has a2 = a3 = 0 and h2, h3 >= 0.
struct ChainParams {
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
  double J1 = 0.0;
  double J2 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;

  bool finite() const;
  bool canonical() const { return alpha2 == 0.0 && alpha3 == 0.0 && h2 >= 0.0 && h3 >= 0.0; }

  ChainParams with_h1(double value) const {
    ChainParams p = *this;
    p.h1 = value;
    return p;
  }
};

// h2=6, h3=7, J1=4, J2=5 at the given h1.
inline ChainParams reference_chain(double h1 = 0.0) { return {h1, 6.0, 7.0, 4.0, 5.0}; }

enum class Pauli { X, Y, Z };

// Single-site Pauli operator embedded in the 8-dim product space.
// Basis index = 4 s1 + 2 s2 + s3 with s = 0 for up, s = 1 for down.
Matrix8 pauli(Pauli which, int site);

Matrix8 build_hamiltonian(const ChainParams& p);

// X = x1 x2 x3, flips all three spins; commutes with H when a2 = a3 = 0.
Matrix8 parity_operator();

// V = exp(-i (a2 z2 + a3 z3)).
Matrix8 gauge_rotation(double alpha2, double alpha3);

enum class SiteState { Up, Down, Plus };

StateVector basis_state(std::span<const SiteState> sites);

// Parses "uuu", "+uu", "udu", ... (u = up, d = down, + = (up+down)/sqrt 2).
StateVector basis_state(std::string_view spec);

inline StateVector all_up() { return basis_state("uuu"); }
inline StateVector plus_up_up() { return basis_state("+uu"); }

// Expectation <psi|O|psi>, real part.
double expectation(const Matrix8& op, const StateVector& psi);

}  // namespace spinprobe
