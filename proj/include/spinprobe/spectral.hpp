#pragma once

#include <array>
#include <vector>

#include "spinprobe/model.hpp"

namespace spinprobe {

// How the 8 eigenvalues are numbered.
//  SortedDescending: eps[0] >= ... >= eps[7].
//  ClosedForm: eps[0..3] follow the closed-form branches (eps1..eps4, which
//  are not monotone in general, e.g. eps4 < 0 between the two zero crossings)
//  and eps[4..7] = -eps4, -eps3, -eps2, -eps1.
enum class Labeling { SortedDescending, ClosedForm };

struct EnergyCluster {
  double energy = 0.0;
  int multiplicity = 0;
  Matrix8 projector;
};

struct EigenSystem {
  std::array<double, 8> eps{};
  Matrix8 vectors;                 // column j belongs to eps[j]
  std::array<Matrix8, 8> projs;    // projector onto the eigenspace of eps[j]
  std::vector<EnergyCluster> clusters;  // distinct eigenvalues, descending
  Labeling labeling = Labeling::SortedDescending;
  double cluster_tol = 0.0;
  std::array<int, 8> cluster_of{};  // cluster index holding label j
};

// Degeneracy tolerance 1e-8 (1 + ||H||), ||H|| the spectral norm.
inline double cluster_tolerance(double spectral_norm) { return 1e-8 * (1.0 + spectral_norm); }

EigenSystem diagonalize(const Matrix8& h);

// ClosedForm labeling needs the parameters; throws BranchFailure if the
// closed form cannot be evaluated or disagrees with the numerical spectrum.
EigenSystem diagonalize(const ChainParams& p, Labeling labeling = Labeling::SortedDescending);

struct ClosedFormEnergies {
  std::array<double, 4> eps{};  // eps1..eps4 in closed-form order
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double max_imag = 0.0;        // largest imaginary residue before rounding
};

// Explicit eigenenergies from the cubic resolvent, evaluated in complex
// arithmetic with principal branches. Requires a2 = a3 = 0.
ClosedFormEnergies closed_form_energies(const ChainParams& p);

// The quantity printed as sqrt(det H); used as a polynomial, no identity is
// assumed.
double sqrt_det_polynomial(const ChainParams& p);

struct ZeroFieldBlocks {
  Eigen::Matrix4d up;    // s1 = up sector
  Eigen::Matrix4d down;  // s1 = down sector
};

// The two 4x4 blocks of H at h1 = 0. With site 1 as the most significant bit
// they are the top-left and bottom-right blocks of build_hamiltonian.
ZeroFieldBlocks zero_field_blocks(const ChainParams& p);

struct ZeroFieldSpectrum {
  double eps_I = 0.0;
  double eps_II = 0.0;
  double S0 = 0.0;
  double C0 = 0.0;
};

// h1 is ignored.
ZeroFieldSpectrum zero_field_spectrum(const ChainParams& p);

// H restricted to the X = +1 (parity = +1) or X = -1 subspace, in the basis
// (|s> + parity |flip s>)/sqrt 2 with s1 = up.
Eigen::Matrix4cd parity_sector(const Matrix8& h, int parity);
StateVector lift_sector_vector(const Eigen::Vector4cd& v, int parity);

struct LevelCrossing {
  double h1 = 0.0;
  double energy_even = 0.0;
  double energy_odd = 0.0;
  StateVector even_state;
  StateVector odd_state;
};

// First h1 in (lo, hi] where eps4 = eps5 = 0, found as the first sign change
// of det(H restricted to X = +1). Throws InvalidInput if there is none.
LevelCrossing find_level_crossing(const ChainParams& base, double lo, double hi, int scan_points = 2000);

}  // namespace spinprobe
