#include "spinprobe/pipeline.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "spinprobe/error.hpp"

namespace spinprobe {

SyntheticProvider::SyntheticProvider(ChainParams truth, double noise_sigma, std::uint64_t seed)
    : truth_(truth), sigma_(noise_sigma), seed_(seed) {
  if (!truth.finite()) throw Error(ErrorKind::InvalidInput, "ground-truth parameters must be finite");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidInput, "noise sigma must be >= 0");
}

TimeTrace SyntheticProvider::acquire(const TraceRequest& request) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(count_)};
  ++count_;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  const NoiseSpec noise{sigma_, (static_cast<std::uint64_t>(words[0]) << 32) | words[1]};

  TimeGrid g;
  g.dt = request.dt;
  g.count = static_cast<std::size_t>(std::llround(request.duration / request.dt));
  return trace_sx1(truth_.with_h1(request.h1), basis_state(request.init), g, noise);
}

TimeTrace RecordingProvider::acquire(const TraceRequest& request) {
  TimeTrace t = inner_.acquire(request);
  records_.emplace_back(request, t);
  return t;
}

const char* to_string(Strategy s) {
  return s == Strategy::LargeFieldFirst ? "large-field-first" : "zero-field-first";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "large-field-first") return Strategy::LargeFieldFirst;
  if (name == "zero-field-first") return Strategy::ZeroFieldFirst;
  throw Error(ErrorKind::InvalidInput,
              "unknown strategy '" + std::string(name) + "' (use large-field-first or zero-field-first)");
}

double pipeline_dt(double h1, double prior_scale) {
  return nyquist_dt(2.0 * (std::abs(h1) + 4.0 * prior_scale));
}

EstimateResult run_pipeline(TraceProvider& provider, const PipelineOptions& o) {
  if (!(o.prior_scale > 0.0) || !(o.trace_duration > 0.0) || !(o.target_accuracy > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "prior scale, trace duration and target accuracy must be positive");
  }
  if (o.sign_h1 == 0.0) throw Error(ErrorKind::InvalidInput, "sign check needs h1 != 0");

  EstimateResult result;
  Diagnostics& diag = result.diagnostics;
  diag.notes.push_back(std::string("strategy: ") + to_string(o.strategy));

  auto measure = [&](const char* stage, double h1, const char* init, double duration, double dt) {
    TimeTrace t = provider.acquire({stage, h1, init, duration, dt});
    t.validate();
    return t;
  };
  // The mean is removed first so the threshold is set by the strongest
  // oscillating line rather than by the DC term.
  auto peaks_of = [&](TimeTrace t) {
    double mean = 0.0;
    for (double s : t.samples) mean += s;
    mean /= static_cast<double>(t.samples.size());
    double ms = 0.0;
    for (double& s : t.samples) {
      s -= mean;
      ms += s * s;
    }
    PeakList pl = find_peaks(dft(t, o.window, o.zero_pad), o.rel_threshold);
    // a flat trace has only rounding left after the mean goes; a relative
    // threshold would pick that up as lines
    if (std::sqrt(ms / static_cast<double>(t.samples.size())) < o.flat_floor) pl.peaks.clear();
    std::erase_if(pl.peaks, [&](const Peak& p) { return p.quality < o.min_quality; });
    return o.fit_lines ? fit_line_frequencies(t, pl) : pl;
  };

  std::vector<SweepPeaks> fit_data;

  PeakList zero_peaks;
  auto zero_stage = [&] {
    const TimeTrace t = measure("zero-field", 0.0, "+uu", o.trace_duration, pipeline_dt(0.0, o.prior_scale));
    zero_peaks = peaks_of(t);
    if (zero_peaks.frequencies(2.0 * zero_peaks.resolution).empty()) {
      throw Error(ErrorKind::Unidentifiable,
                  "no oscillation at h1 = 0 from |+ up up>: J1 = 0 decouples the probe spin, nothing beyond "
                  "site 1 is observable");
    }
    diag.zero_field = extract_zero_field(zero_peaks);
    fit_data.push_back({0.0, plus_up_up(), zero_peaks});
  };

  auto large_stage = [&](double start) {
    std::vector<FieldPeaks> scans;
    AsymptoticOptions ao;
    ao.drift_tolerance = 4.0 * o.target_accuracy;
    double h1 = start;
    bool converged = false;
    for (int step = 0; step <= o.max_field_steps; ++step, h1 *= 2.0) {
      const TimeTrace t = measure("large-field", h1, "uuu", o.trace_duration, pipeline_dt(h1, o.prior_scale));
      PeakList pl = peaks_of(t);
      if (pl.peaks.empty()) {
        throw Error(ErrorKind::Unidentifiable, "no response from |up up up> at h1 = " + std::to_string(h1) +
                                                   ": the probe spin looks decoupled (J1 = 0)");
      }
      scans.push_back({h1, pl});
      fit_data.push_back({h1, all_up(), pl});
      if (scans.size() < 2) continue;
      diag.asymptotic = extract_asymptotic(scans, ao);
      if (diag.asymptotic->convergence_residual < 4.0 * o.target_accuracy) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      diag.notes.push_back("large-field features did not settle within " + std::to_string(o.max_field_steps) +
                           " doublings; last drift " + std::to_string(diag.asymptotic->convergence_residual));
    }
    diag.notes.push_back(std::string("asymptotic route: ") + to_string(diag.asymptotic->route));
    if (diag.asymptotic->degenerate) diag.notes.push_back("M = 0: symmetric chain (h2 = h3, J2 = 0)");
    if (diag.asymptotic->crosscheck > 1.0) {
      diag.notes.push_back("divergent peaks sit further from 2 h1 +- (P +- M) than expected");
    }
  };

  if (o.strategy == Strategy::LargeFieldFirst) {
    large_stage(5.0 * o.prior_scale);
    zero_stage();
  } else {
    zero_stage();
    large_stage(2.0 * std::sqrt(diag.zero_field->S0));
  }

  const Magnitudes mag = invert_parameters(*diag.asymptotic, *diag.zero_field, o.feature_tolerance);
  result.h2 = mag.h2;
  result.h3 = mag.h3;
  result.absJ1 = mag.absJ1;
  result.absJ2 = mag.absJ2;

  const TimeTrace sign_trace =
      measure("sign", o.sign_h1, "uuu", o.sign_duration, pipeline_dt(o.sign_h1, o.prior_scale) / 4.0);
  diag.signs = determine_signs(sign_trace, o.sign_h1, mag, o.signs);
  result.signJ1 = diag.signs->signJ1;
  result.signJ2 = diag.signs->signJ2;

  for (double h1 : o.sweep_h1) {
    const TimeTrace t = measure("sweep", h1, "uuu", o.trace_duration, pipeline_dt(h1, o.prior_scale));
    fit_data.push_back({h1, all_up(), peaks_of(t)});
  }

  const PeakResiduals pr = peak_residuals(result.params(), fit_data);
  result.residual_rms = pr.rms;
  result.residual_max = pr.max;
  if (pr.skipped > 0) diag.notes.push_back(std::to_string(pr.skipped) + " peaks matched no predicted line");

  if (o.refine) {
    Diagnostics keep = diag;
    result = refine(result, fit_data);
    keep.refine = result.diagnostics.refine;
    result.diagnostics = keep;
  }
  return result;
}

}  // namespace spinprobe
