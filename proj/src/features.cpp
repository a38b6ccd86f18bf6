#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "spinprobe/error.hpp"
#include "spinprobe/estimate.hpp"

namespace spinprobe {

namespace {

struct ScanValues {
  double P = 0.0, M = 0.0;
  AsymptoticRoute route = AsymptoticRoute::Quartet;
  std::vector<double> divergent;              // ascending
  std::optional<double> conv_outer, conv_inner;  // peaks at eps1-eps4 and eps2-eps3
};

std::optional<double> peak_near(const std::vector<Peak>& peaks, double omega, double tol) {
  std::optional<double> best;
  for (const auto& p : peaks) {
    if (std::abs(p.omega - omega) <= tol && (!best || std::abs(p.omega - omega) < std::abs(*best - omega))) {
      best = p.omega;
    }
  }
  return best;
}

ScanValues scan_values(const FieldPeaks& scan, double match_tol) {
  const double h = std::abs(scan.h1);
  std::vector<Peak> cand;
  for (const auto& p : scan.peaks.peaks) {
    if (p.omega > 0.5 * h) cand.push_back(p);
  }
  std::sort(cand.begin(), cand.end(), [](const Peak& a, const Peak& b) { return a.omega < b.omega; });

  // The four divergent lines obey (e1+e2) + (e3+e4) = (e1+e3) + (e2+e4), so
  // the outer and inner pairs share a centre.
  ScanValues out;
  double best_weight = -1.0;
  const std::size_t n = cand.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t d = c + 1; d < n; ++d) {
          const double mismatch = cand[a].omega + cand[d].omega - cand[b].omega - cand[c].omega;
          if (std::abs(mismatch) > match_tol) continue;
          const double weight = cand[a].magnitude + cand[b].magnitude + cand[c].magnitude + cand[d].magnitude;
          if (weight > best_weight) {
            best_weight = weight;
            out.divergent = {cand[a].omega, cand[b].omega, cand[c].omega, cand[d].omega};
          }
        }

  if (!out.divergent.empty()) {
    const double outer = out.divergent[3] - out.divergent[0];  // eps1 - eps4 + eps2 - eps3
    const double inner = out.divergent[2] - out.divergent[1];  // eps1 - eps4 - (eps2 - eps3)
    out.P = (outer + inner) / 4.0;
    out.M = (outer - inner) / 4.0;
    out.route = AsymptoticRoute::Quartet;
    out.conv_outer = peak_near(scan.peaks.peaks, 2.0 * out.P, match_tol);
    out.conv_inner = peak_near(scan.peaks.peaks, 2.0 * out.M, match_tol);
    return out;
  }

  if (cand.size() >= 2) {
    // eps2 = eps3: the quartet collapses to e1+e2 and e3+e4.
    std::partial_sort(cand.begin(), cand.begin() + 2, cand.end(),
                      [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
    const double lo = std::min(cand[0].omega, cand[1].omega), hi = std::max(cand[0].omega, cand[1].omega);
    out.divergent = {lo, hi};
    out.P = (hi - lo) / 2.0;
    out.M = 0.0;
    out.route = AsymptoticRoute::Pair;
    out.conv_outer = peak_near(scan.peaks.peaks, 2.0 * out.P, match_tol);
    return out;
  }

  throw Error(ErrorKind::MissingPeak, "no divergent peaks near 2 h1 at h1 = " + std::to_string(scan.h1) +
                                          "; lower h1 or lengthen the observation window");
}

double richardson(double prev, double last, double r2) { return (r2 * last - prev) / (r2 - 1.0); }

}  // namespace

const char* to_string(AsymptoticRoute r) {
  switch (r) {
    case AsymptoticRoute::Convergent: return "convergent";
    case AsymptoticRoute::Quartet: return "quartet";
    case AsymptoticRoute::Pair: return "pair";
  }
  return "?";
}

FeatureValues forward_features(const Magnitudes& m) {
  const double h2s = m.h2 * m.h2, h3s = m.h3 * m.h3, j1s = m.absJ1 * m.absJ1, j2s = m.absJ2 * m.absJ2;
  FeatureValues f;
  f.P = std::sqrt((m.h2 + m.h3) * (m.h2 + m.h3) + j2s);
  f.M = std::sqrt((m.h2 - m.h3) * (m.h2 - m.h3) + j2s);
  f.S0 = h2s + h3s + j1s + j2s;
  f.C0 = h2s * h3s + j1s * (h3s + j2s);
  return f;
}

AsymptoticFeatures extract_asymptotic(std::span<const FieldPeaks> scans, const AsymptoticOptions& options) {
  if (scans.size() < 2) throw Error(ErrorKind::InvalidInput, "need peak lists at two or more h1 values");
  for (std::size_t k = 1; k < scans.size(); ++k) {
    if (!(std::abs(scans[k].h1) > std::abs(scans[k - 1].h1))) {
      throw Error(ErrorKind::InvalidInput, "h1 values must increase in magnitude");
    }
  }

  std::vector<ScanValues> vals;
  AsymptoticFeatures out;
  for (const auto& s : scans) {
    vals.push_back(scan_values(s, options.match_cells * s.peaks.resolution));
    out.h1_values.push_back(s.h1);
  }
  const ScanValues& prev = vals[vals.size() - 2];
  const ScanValues& last = vals.back();
  if (prev.route != last.route) {
    throw Error(ErrorKind::MissingPeak, "divergent peak structure differs between the last two h1 values");
  }

  double p_prev = prev.P, p_last = last.P, m_prev = prev.M, m_last = last.M;
  out.route = last.route;
  if (last.route == AsymptoticRoute::Quartet && prev.conv_outer && prev.conv_inner && last.conv_outer &&
      last.conv_inner && std::abs(*last.conv_outer - *prev.conv_outer) <= options.drift_tolerance &&
      std::abs(*last.conv_inner - *prev.conv_inner) <= options.drift_tolerance) {
    out.route = AsymptoticRoute::Convergent;
    p_prev = *prev.conv_outer / 2.0;
    p_last = *last.conv_outer / 2.0;
    m_prev = *prev.conv_inner / 2.0;
    m_last = *last.conv_inner / 2.0;
  }
  for (const auto& v : vals) {
    out.P_values.push_back(v.P);
    out.M_values.push_back(v.M);
  }
  out.P_values.back() = p_last;
  out.M_values.back() = m_last;
  out.P_values[vals.size() - 2] = p_prev;
  out.M_values[vals.size() - 2] = m_prev;

  const double h_prev = std::abs(scans[scans.size() - 2].h1), h_last = std::abs(scans.back().h1);
  const double r2 = (h_last / h_prev) * (h_last / h_prev);
  out.P = richardson(p_prev, p_last, r2);
  out.M = out.route == AsymptoticRoute::Pair ? 0.0 : std::max(0.0, richardson(m_prev, m_last, r2));
  out.degenerate = out.route == AsymptoticRoute::Pair;
  out.h1_used = h_last;
  out.convergence_residual = std::max(std::abs(p_last - p_prev), std::abs(m_last - m_prev));
  out.extrapolation = std::max(std::abs(out.P - p_last), std::abs(out.M - m_last));

  // Divergent peaks sit at 2 h1 -+ (P + M), 2 h1 -+ (P - M) up to O(1/h1).
  const double allowance =
      (out.P * out.P + out.M * out.M) / h_last + options.match_cells * scans.back().peaks.resolution;
  std::vector<double> expected;
  if (last.divergent.size() == 4) {
    expected = {2 * h_last - out.P - out.M, 2 * h_last - out.P + out.M, 2 * h_last + out.P - out.M,
                2 * h_last + out.P + out.M};
  } else {
    expected = {2 * h_last - out.P, 2 * h_last + out.P};
  }
  for (std::size_t k = 0; k < expected.size(); ++k) {
    out.crosscheck = std::max(out.crosscheck, std::abs(last.divergent[k] - expected[k]) / allowance);
  }
  return out;
}

ZeroFieldFeatures zero_field_features(double omega_plus, double omega_minus) {
  if (!(omega_plus > omega_minus) || !(omega_minus >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "need omega_plus > omega_minus >= 0");
  }
  ZeroFieldFeatures z;
  z.omega_plus = omega_plus;
  z.omega_minus = omega_minus;
  z.S0 = (omega_plus * omega_plus + omega_minus * omega_minus) / 4.0;
  const double root = omega_plus * omega_minus / 4.0;
  z.C0 = root * root;
  return z;
}

ZeroFieldFeatures extract_zero_field(const PeakList& peaks) {
  const auto f = peaks.frequencies(2.0 * peaks.resolution);
  if (f.size() != 2) {
    throw Error(ErrorKind::MalformedInput, "expected two non-zero peaks at h1 = 0, found " +
                                               std::to_string(f.size()) +
                                               " (J1 ~ 0 or insufficient resolution)");
  }
  return zero_field_features(f[1], f[0]);
}

Magnitudes invert_parameters(const FeatureValues& f, double rel_tolerance) {
  if (!(f.P >= 0.0 && f.M >= 0.0 && f.S0 >= 0.0 && f.C0 >= 0.0) || !std::isfinite(f.P + f.M + f.S0 + f.C0)) {
    throw Error(ErrorKind::InvalidInput, "features must be finite and non-negative");
  }
  const double tol = rel_tolerance * (f.P * f.P + f.M * f.M + f.S0);
  auto square = [&](double v, const char* what) {
    if (v >= 0.0) return v;
    if (v >= -tol) return 0.0;
    throw Error(ErrorKind::InconsistentFeatures,
                std::string("features are inconsistent: ") + what + " = " + std::to_string(v) + " < 0");
  };

  const double pp = f.P * f.P, mm = f.M * f.M;
  const double j1s = f.S0 - (pp + mm) / 2.0;
  if (j1s <= tol) {
    throw Error(ErrorKind::Unidentifiable,
                "J1^2 = " + std::to_string(j1s) + ": the probe spin is decoupled from the chain");
  }
  const double h2h3 = square((pp - mm) / 4.0, "h2 h3");
  const double h3s_j2s = square((f.C0 - h2h3 * h2h3) / j1s, "h3^2 + J2^2");
  const double h2s = (pp + mm) / 2.0 - h3s_j2s;
  if (h2s <= tol) {
    if (h2s < -tol) {
      throw Error(ErrorKind::InconsistentFeatures, "features are inconsistent: h2^2 = " + std::to_string(h2s));
    }
    throw Error(ErrorKind::Unidentifiable, "h2 ~ 0: h3 and J2 cannot be separated");
  }
  const double h3s = h2h3 * h2h3 / h2s;
  const double j2s = square(h3s_j2s - h3s, "J2^2");
  return {std::sqrt(h2s), std::sqrt(h3s), std::sqrt(j1s), std::sqrt(j2s)};
}

Magnitudes invert_parameters(const AsymptoticFeatures& a, const ZeroFieldFeatures& z, double rel_tolerance) {
  return invert_parameters(FeatureValues{a.P, a.M, z.S0, z.C0}, rel_tolerance);
}

}  // namespace spinprobe
