#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spinprobe/error.hpp"
#include "spinprobe/estimate.hpp"

namespace spinprobe {

namespace {

// Index of the first turning point of |s| after t = 0.
std::size_t first_extremum(const std::vector<double>& s) {
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    if (std::abs(s[k + 1]) < std::abs(s[k])) return k;
  }
  return s.size() - 1;
}

struct Fit {
  double scale = 0.0;
  double rms2 = 0.0;
};

// Best non-negative multiple of the template.
Fit fit(const std::vector<double>& m, const std::vector<double>& s) {
  double ms = 0.0, ss = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    ms += m[k] * s[k];
    ss += s[k] * s[k];
  }
  Fit f;
  f.scale = ss > 0.0 ? std::max(0.0, ms / ss) : 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) f.rms2 += std::pow(m[k] - f.scale * s[k], 2);
  f.rms2 /= static_cast<double>(m.size());
  return f;
}

}  // namespace

SignDecision determine_signs(const TimeTrace& measured, double h1, const Magnitudes& m,
                             const SignOptions& options) {
  measured.validate();
  if (!(h1 != 0.0) || !std::isfinite(h1)) throw Error(ErrorKind::InvalidInput, "sign check needs h1 != 0");
  if (measured.t0 != 0.0) throw Error(ErrorKind::InvalidInput, "sign check needs a trace starting at t = 0");

  const std::vector<double>& y = measured.samples;
  const double n = static_cast<double>(y.size());
  auto simulate = [&](int s1, int s2) {
    const ChainParams p{h1, m.h2, m.h3, s1 * m.absJ1, s2 * m.absJ2};
    return trace_sx1(p, all_up(), measured.grid()).samples;
  };

  SignDecision out;

  // Leading order <x1(t)> = -2 h1 J1 t^2: project onto t^2 up to the first
  // turning point, before the other spins feed back.
  const std::size_t end = std::min(first_extremum(simulate(1, 1)), first_extremum(simulate(1, -1)));
  out.window_end = measured.time(end);
  double stat = 0.0, t4 = 0.0;
  for (std::size_t k = 0; k <= end; ++k) {
    const double t2 = measured.time(k) * measured.time(k);
    stat += y[k] * t2;
    t4 += t2 * t2;
  }
  out.early_statistic = stat;
  out.signJ1 = (stat > 0.0) == (h1 > 0.0) ? -1 : 1;

  const std::vector<double> sp = simulate(out.signJ1, 1), sm = simulate(out.signJ1, -1);
  const Fit fp = fit(y, sp), fm = fit(y, sm);
  out.rms_plus = std::sqrt(fp.rms2);
  out.rms_minus = std::sqrt(fm.rms2);
  out.signJ2 = fp.rms2 <= fm.rms2 ? 1 : -1;

  double scale2 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    scale2 += y[k] * y[k];
    d2 += std::pow(fp.scale * sp[k] - fm.scale * sm[k], 2);
  }
  const double floor = 1e-15 * std::sqrt(scale2 / n);
  out.noise_estimate = std::max(std::sqrt(std::min(fp.rms2, fm.rms2)), floor);
  const double d = std::sqrt(d2 / n);
  out.margin = std::abs(fp.rms2 - fm.rms2);
  out.threshold = options.z * 2.0 * out.noise_estimate * d / std::sqrt(n);
  out.early_z = std::abs(stat) / (out.noise_estimate * std::sqrt(t4));

  if (!(out.early_z > options.z)) {
    throw Error(ErrorKind::AmbiguousSign, "sign(J1) undecided: early response is " + std::to_string(out.early_z) +
                                              " noise deviations, need " + std::to_string(options.z));
  }
  if (!(out.margin > out.threshold) || d <= floor) {
    throw Error(ErrorKind::AmbiguousSign, "sign(J2) undecided: rms^2 margin " + std::to_string(out.margin) +
                                              " below threshold " + std::to_string(out.threshold));
  }
  return out;
}

}  // namespace spinprobe
