#pragma once

#include <string>
#include <vector>

#include "spinprobe/model.hpp"

namespace spinprobe {

// Plot-ready columns; rows[i][j] belongs to columns[j].
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// h1 = from, from + step, ..., up to `to` (inclusive within half a step).
std::vector<double> field_grid(double from, double to, double step);

// Positions of the six |up up up> lines vs h1: e1+e2, e1+e3, e2+e4, e3+e4,
// e1-e4, e2-e3 (closed-form labels).
Table peaks_vs_h1(const ChainParams& p, const std::vector<double>& h1);

// C and the six surviving amplitudes A21 A31 A42 A43 B41 B32 for |up up up>.
// The spectrum is degenerate at h1 = 0, so that point is refused.
Table amplitudes_vs_h1(const ChainParams& p, const std::vector<double>& h1);

// <x1(t)> from |up up up> at field p.h1 for the four sign patterns of
// (J1, J2): columns t, ++, +-, -+, --.
Table sign_traces(const ChainParams& p, double t_max, double dt);

// All eight eigenvalues, descending, vs h1.
Table eigenenergies(const ChainParams& p, const std::vector<double>& h1);

}  // namespace spinprobe
