#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinprobe/signal.hpp"

namespace spinprobe {

// |h2|, |h3|, |J1|, |J2|: what the peak positions determine. Signs of the
// couplings come from the time-domain comparison.
struct Magnitudes {
  double h2 = 0.0;
  double h3 = 0.0;
  double absJ1 = 0.0;
  double absJ2 = 0.0;
};

// P, M: half the large-h1 limits of eps1 - eps4 and eps2 - eps3.
// S0, C0: symmetric functions of the couplings read off the h1 = 0 peaks.
struct FeatureValues {
  double P = 0.0;
  double M = 0.0;
  double S0 = 0.0;
  double C0 = 0.0;
};

FeatureValues forward_features(const Magnitudes& m);

// Peaks from an |up up up> trace at one (large) h1.
struct FieldPeaks {
  double h1 = 0.0;
  PeakList peaks;
};

enum class AsymptoticRoute {
  Convergent,  // the two h1-independent peaks themselves
  Quartet,     // differences inside the divergent quartet near 2 h1
  Pair,        // only two divergent peaks: M = 0
};

const char* to_string(AsymptoticRoute r);

struct AsymptoticFeatures {
  double P = 0.0;
  double M = 0.0;
  double h1_used = 0.0;               // largest |h1| that entered
  double convergence_residual = 0.0;  // max change of P, M between the last two h1
  double extrapolation = 0.0;         // size of the 1/h1^2 correction applied
  double crosscheck = 0.0;            // worst divergent-peak offset over its allowance (<= 1 is fine)
  AsymptoticRoute route = AsymptoticRoute::Quartet;
  bool degenerate = false;            // M = 0, i.e. h2 = h3 and J2 = 0
  std::vector<double> h1_values, P_values, M_values;  // per-h1, before extrapolation
};

struct AsymptoticOptions {
  double drift_tolerance = 2e-3;  // convergent peaks may move this much between h1 values
  double match_cells = 2.0;       // peak matching tolerance in resolution cells
};

// Needs >= 2 scans with strictly increasing |h1|. Throws MissingPeak when a
// scan has neither the convergent pair nor a divergent quartet/pair.
AsymptoticFeatures extract_asymptotic(std::span<const FieldPeaks> scans, const AsymptoticOptions& options = {});

struct ZeroFieldFeatures {
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double S0 = 0.0;
  double C0 = 0.0;
};

ZeroFieldFeatures zero_field_features(double omega_plus, double omega_minus);

// From the |+ up up> peaks at h1 = 0. Peaks below two resolution cells count
// as DC. Anything other than two remaining peaks throws MalformedInput.
ZeroFieldFeatures extract_zero_field(const PeakList& peaks);

// Closed-form inversion. Intermediate squares in [-tol, 0) with
// tol = rel_tolerance * (P^2 + M^2 + S0) are clamped to zero.
//   J1^2 <= tol or h2^2 <= tol     -> Unidentifiable
//   a more negative intermediate   -> InconsistentFeatures
Magnitudes invert_parameters(const FeatureValues& f, double rel_tolerance = 1e-9);
Magnitudes invert_parameters(const AsymptoticFeatures& a, const ZeroFieldFeatures& z,
                             double rel_tolerance = 1e-9);

struct SignOptions {
  double z = 5.0;  // required margin, in noise standard deviations
};

struct SignDecision {
  int signJ1 = 1;
  int signJ2 = 1;
  double window_end = 0.0;      // early-time window for sign(J1)
  double early_statistic = 0.0; // sum m_k t_k^2 over that window
  double early_z = 0.0;         // |statistic| over its noise standard deviation
  double rms_plus = 0.0;        // fitted rms distance to the signJ2 = +1 simulation
  double rms_minus = 0.0;
  double margin = 0.0;          // |rms_plus^2 - rms_minus^2|
  double threshold = 0.0;       // margin needed to decide
  double noise_estimate = 0.0;
};

// `measured` is an |up up up> trace starting at t = 0 taken at field h1 != 0.
// Throws AmbiguousSign when either decision is within the noise.
SignDecision determine_signs(const TimeTrace& measured, double h1, const Magnitudes& m,
                             const SignOptions& options = {});

// Peaks of one finite-h1 trace, for the least-squares stage.
struct SweepPeaks {
  double h1 = 0.0;
  StateVector initial_state;
  PeakList peaks;
};

struct PeakResiduals {
  std::vector<double> values;  // measured - nearest predicted line
  std::size_t skipped = 0;     // peaks with no line in reach, or two lines in one main lobe
  double rms = 0.0;
  double max = 0.0;
};

// Peaks above two resolution cells compared against the visible lines of
// analytic_spectrum at the given couplings (h1 taken from each sweep entry).
// A peak farther than `reach_cells` resolution cells from every line, or
// with a second line inside the main lobe, is skipped.
PeakResiduals peak_residuals(const ChainParams& p, std::span<const SweepPeaks> sweep, double reach_cells = 5.0);

struct RefineOptions {
  int max_iterations = 100;
  double reach_cells = 5.0;
};

struct RefineReport {
  bool improved = false;
  int iterations = 0;
  std::size_t residual_count = 0;
  double rms_before = 0.0;
  double rms_after = 0.0;
  std::string note;
};

struct Diagnostics {
  std::optional<AsymptoticFeatures> asymptotic;
  std::optional<ZeroFieldFeatures> zero_field;
  std::optional<SignDecision> signs;
  std::optional<RefineReport> refine;
  std::vector<std::string> notes;
};

struct EstimateResult {
  double h2 = 0.0;
  double h3 = 0.0;
  double absJ1 = 0.0;
  double absJ2 = 0.0;
  int signJ1 = 1;
  int signJ2 = 1;
  double residual_rms = 0.0;
  double residual_max = 0.0;
  Diagnostics diagnostics;

  Magnitudes magnitudes() const { return {h2, h3, absJ1, absJ2}; }
  ChainParams params(double h1 = 0.0) const { return {h1, h2, h3, signJ1 * absJ1, signJ2 * absJ2}; }
};

// Levenberg-Marquardt over (h2, h3, |J1|, |J2|) on peak_residuals, signs
// fixed. Later passes drop peaks whose residual is far above the median and
// refit. Never returns a larger residual than
// the initial estimate has on the same peaks; when nothing improves, the
// initial estimate comes back with a note in the report.
EstimateResult refine(const EstimateResult& initial, std::span<const SweepPeaks> sweep,
                      const RefineOptions& options = {});

}  // namespace spinprobe
