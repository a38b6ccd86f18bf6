#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "spinprobe/error.hpp"
#include "spinprobe/estimate.hpp"
#include "spinprobe/pipeline.hpp"

using namespace spinprobe;

namespace {

constexpr double kPi = std::numbers::pi;
const ChainParams kChain{0.0, 6.0, 7.0, 4.0, 5.0};

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected spinprobe::Error");
  return ErrorKind::Io;
}

double rel(double got, double want) { return std::abs(got / want - 1.0); }

double max_rel(const Magnitudes& m, double h2, double h3, double j1, double j2) {
  return std::max({rel(m.h2, h2), rel(m.h3, h3), rel(m.absJ1, std::abs(j1)), rel(m.absJ2, std::abs(j2))});
}

// Written out from the definitions, independent of forward_features.
FeatureValues features_by_hand(double h2, double h3, double j1, double j2) {
  return {std::sqrt((h2 + h3) * (h2 + h3) + j2 * j2), std::sqrt((h2 - h3) * (h2 - h3) + j2 * j2),
          h2 * h2 + h3 * h3 + j1 * j1 + j2 * j2, h2 * h2 * h3 * h3 + j1 * j1 * (h3 * h3 + j2 * j2)};
}

// Same peak picking as the pipeline: mean removed, Hann, zero padding 4.
PeakList peaks_of(TimeTrace t, double threshold, bool fit = true) {
  double mean = 0.0;
  for (double s : t.samples) mean += s;
  mean /= static_cast<double>(t.samples.size());
  double ms = 0.0;
  for (double& s : t.samples) {
    s -= mean;
    ms += s * s;
  }
  PeakList pl = find_peaks(dft(t, Window::Hann, 4), threshold);
  if (std::sqrt(ms / static_cast<double>(t.samples.size())) < PipelineOptions{}.flat_floor) pl.peaks.clear();
  std::erase_if(pl.peaks, [](const Peak& p) { return p.quality < 10.0; });
  return fit ? fit_line_frequencies(t, pl) : pl;
}

TimeTrace trace_at(const ChainParams& p, double h1, const StateVector& psi0, double duration, double prior = 10.0,
                   NoiseSpec noise = {}) {
  TimeGrid g;
  g.dt = pipeline_dt(h1, prior);
  g.count = static_cast<std::size_t>(std::llround(duration / g.dt));
  return trace_sx1(p.with_h1(h1), psi0, g, noise);
}

// A peak list holding the exact visible lines, as if measured perfectly.
PeakList exact_peaks(const ChainParams& p, const StateVector& psi0, double duration) {
  const LineSpectrum ls = analytic_spectrum(p, psi0);
  PeakList pl;
  pl.duration = duration;
  pl.resolution = 2.0 * kPi / duration;
  for (const auto& l : ls.lines) {
    if (std::abs(l.amplitude) < 1e-6) continue;
    pl.peaks.push_back({l.omega, std::abs(l.amplitude) / 2.0, 1e6});
  }
  return pl;
}

std::vector<double> sorted_freqs(const PeakList& pl, double min) {
  std::vector<double> f = pl.frequencies(min);
  std::sort(f.begin(), f.end());
  return f;
}

EstimateResult from_truth(const ChainParams& p) {
  EstimateResult r;
  r.h2 = p.h2;
  r.h3 = p.h3;
  r.absJ1 = std::abs(p.J1);
  r.absJ2 = std::abs(p.J2);
  r.signJ1 = p.J1 < 0 ? -1 : 1;
  r.signJ2 = p.J2 < 0 ? -1 : 1;
  return r;
}

}  // namespace

TEST_SUITE("estimate") {
  TEST_CASE("inversion of (194, 26, 126, 2948) gives the chain (6, 7, 4, 5)") {
    const FeatureValues f{std::sqrt(194.0), std::sqrt(26.0), 126.0, 2948.0};
    const Magnitudes m = invert_parameters(f);
    CHECK(max_rel(m, 6, 7, 4, 5) < 1e-12);

    // Brute force over the integer grid: (6, 7, 4, 5) is the only exact match.
    int matches = 0;
    for (int h2 = 0; h2 <= 10; ++h2)
      for (int h3 = 0; h3 <= 10; ++h3)
        for (int j1 = 0; j1 <= 10; ++j1)
          for (int j2 = 0; j2 <= 10; ++j2) {
            const FeatureValues g = features_by_hand(h2, h3, j1, j2);
            if (std::abs(g.P * g.P - 194) < 1e-9 && std::abs(g.M * g.M - 26) < 1e-9 && g.S0 == 126 &&
                g.C0 == 2948) {
              ++matches;
              CHECK(h2 == 6);
              CHECK(h3 == 7);
              CHECK(j1 == 4);
              CHECK(j2 == 5);
            }
          }
    CHECK(matches == 1);
  }

  TEST_CASE("forward features agree with the definitions") {
    const FeatureValues f = forward_features({6, 7, 4, 5});
    CHECK(f.P == doctest::Approx(std::sqrt(194.0)).epsilon(1e-14));
    CHECK(f.M == doctest::Approx(std::sqrt(26.0)).epsilon(1e-14));
    CHECK(f.S0 == doctest::Approx(126.0).epsilon(1e-14));
    CHECK(f.C0 == doctest::Approx(2948.0).epsilon(1e-14));
  }

  TEST_CASE("symmetric chain h2 = h3, J2 = 0") {
    const double h = 3.5, j = 2.25;
    const FeatureValues f{2 * h, 0.0, 2 * h * h + j * j, h * h * h * h + h * h * j * j};
    const Magnitudes m = invert_parameters(f);
    CHECK(m.h2 == doctest::Approx(h).epsilon(1e-12));
    CHECK(m.h3 == doctest::Approx(h).epsilon(1e-12));
    CHECK(m.absJ1 == doctest::Approx(j).epsilon(1e-12));
    CHECK(m.absJ2 < 1e-6);
  }

  TEST_CASE("invert after forward is the identity on 1000 draws") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> h(1.0, 10.0), j(0.5, 8.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double h2 = h(gen), h3 = h(gen), j1 = j(gen), j2 = j(gen);
      const Magnitudes m = invert_parameters(features_by_hand(h2, h3, j1, j2));
      worst = std::max(worst, max_rel(m, h2, h3, j1, j2));
      const FeatureValues back = forward_features(m), want = features_by_hand(h2, h3, j1, j2);
      CHECK(rel(back.P, want.P) < 1e-8);
      CHECK(rel(back.C0, want.C0) < 1e-8);
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("h2 and h3 are told apart") {
    const Magnitudes a = invert_parameters(features_by_hand(6, 7, 4, 5));
    const Magnitudes b = invert_parameters(features_by_hand(7, 6, 4, 5));
    CHECK(max_rel(a, 6, 7, 4, 5) < 1e-12);
    CHECK(max_rel(b, 7, 6, 4, 5) < 1e-12);
  }

  TEST_CASE("inversion errors") {
    CHECK(kind_of([] { invert_parameters(features_by_hand(6, 7, 0, 5)); }) == ErrorKind::Unidentifiable);
    FeatureValues low_s0 = features_by_hand(6, 7, 4, 5);
    low_s0.S0 -= 40.0;
    CHECK(kind_of([&] { invert_parameters(low_s0); }) == ErrorKind::Unidentifiable);
    FeatureValues big_c0 = features_by_hand(6, 7, 4, 5);
    big_c0.C0 *= 3.0;
    CHECK(kind_of([&] { invert_parameters(big_c0); }) == ErrorKind::InconsistentFeatures);
    CHECK(kind_of([] { invert_parameters(FeatureValues{-1, 1, 1, 1}); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { invert_parameters(FeatureValues{NAN, 1, 1, 1}); }) == ErrorKind::InvalidInput);
  }

  TEST_CASE("zero-field features from the quoted peak positions") {
    const ZeroFieldFeatures z = zero_field_features(19.4887, 11.1439);
    CHECK(rel(z.S0, 126.0) < 5e-3);
    CHECK(rel(z.C0, 2948.0) < 5e-3);
    CHECK(kind_of([] { zero_field_features(1.0, 2.0); }) == ErrorKind::InvalidInput);
  }

  TEST_CASE("zero-field features from a simulated |+ up up> trace") {
    const TimeTrace t = trace_at(kChain, 0.0, plus_up_up(), 200.0);
    const ZeroFieldFeatures z = extract_zero_field(peaks_of(t, 1e-3, false));
    CHECK(rel(z.S0, 126.0) < 5e-3);
    CHECK(rel(z.C0, 2948.0) < 5e-3);
    CHECK(z.omega_plus > z.omega_minus);
  }

  TEST_CASE("J1 = 0 leaves no zero-field peaks") {
    const ChainParams p{0.0, 6.0, 7.0, 0.0, 5.0};
    const PeakList pl = peaks_of(trace_at(p, 0.0, plus_up_up(), 200.0), 1e-3, false);
    CHECK(kind_of([&] { extract_zero_field(pl); }) == ErrorKind::MalformedInput);
  }

  TEST_CASE("zero-field round trip on random chains") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> h(1.0, 10.0), j(0.5, 8.0);
    for (int i = 0; i < 10; ++i) {
      const ChainParams p{0.0, h(gen), h(gen), j(gen), j(gen)};
      const PeakList pl = peaks_of(trace_at(p, 0.0, plus_up_up(), 200.0), 1e-7, false);
      const ZeroFieldFeatures z = extract_zero_field(pl);
      const ZeroFieldSpectrum want = zero_field_spectrum(p);
      CHECK(std::abs(z.omega_plus - (want.eps_I + want.eps_II)) < pl.resolution);
      CHECK(std::abs(z.omega_minus - std::abs(want.eps_I - want.eps_II)) < pl.resolution);
    }
  }

  TEST_CASE("asymptotic features at h1 = 100, 200") {
    std::vector<FieldPeaks> scans;
    for (double h1 : {100.0, 200.0}) scans.push_back({h1, peaks_of(trace_at(kChain, h1, all_up(), 200.0), 1e-4)});
    const AsymptoticFeatures a = extract_asymptotic(scans);
    CHECK(std::abs(a.P - std::sqrt(194.0)) < 1e-2);
    CHECK(std::abs(a.M - std::sqrt(26.0)) < 1e-2);
    CHECK(a.h1_used == 200.0);
    CHECK_FALSE(a.degenerate);
    CHECK(a.crosscheck <= 1.0);
    CHECK(a.P >= a.M);

    // The divergent line near 2 h1 + P + M sits at 219.184 at h1 = 100; its
    // asymptote 219.03 is 0.157 away.
    const LineSpectrum exact = analytic_spectrum(kChain.with_h1(100.0), all_up());
    const double asymptote = 200.0 + std::sqrt(194.0) + std::sqrt(26.0);
    double line = 0.0;
    for (const auto& l : exact.lines)
      if (std::abs(l.omega - asymptote) < std::abs(line - asymptote)) line = l.omega;
    CHECK(line == doctest::Approx(219.184).epsilon(1e-5));
    double peak = 0.0;
    for (double w : scans[0].peaks.frequencies())
      if (std::abs(w - line) < std::abs(peak - line)) peak = w;
    CHECK(std::abs(peak - line) < 0.05);
    CHECK(std::abs(peak - asymptote) < 0.2);
  }

  TEST_CASE("convergent route when the h1-independent peaks are visible") {
    std::vector<FieldPeaks> scans;
    for (double h1 : {25.0, 50.0}) scans.push_back({h1, peaks_of(trace_at(kChain, h1, all_up(), 200.0), 1e-4)});
    AsymptoticOptions opts;
    opts.drift_tolerance = 0.2;
    const AsymptoticFeatures a = extract_asymptotic(scans, opts);
    CHECK(a.route == AsymptoticRoute::Convergent);
    CHECK(std::abs(a.P - std::sqrt(194.0)) < 1e-2);
    CHECK(std::abs(a.M - std::sqrt(26.0)) < 1e-2);
  }

  TEST_CASE("symmetric chain is flagged degenerate") {
    const ChainParams p{0.0, 5.0, 5.0, 3.0, 0.0};
    std::vector<FieldPeaks> scans;
    for (double h1 : {100.0, 200.0}) scans.push_back({h1, peaks_of(trace_at(p, h1, all_up(), 200.0), 1e-4)});
    const AsymptoticFeatures a = extract_asymptotic(scans);
    CHECK(a.degenerate);
    CHECK(a.M == 0.0);
    CHECK(std::abs(a.P - 10.0) < 1e-2);
  }

  TEST_CASE("asymptotic extraction errors") {
    const PeakList pl = peaks_of(trace_at(kChain, 100.0, all_up(), 200.0), 1e-4);
    const std::vector<FieldPeaks> one{{100.0, pl}};
    CHECK(kind_of([&] { extract_asymptotic(one); }) == ErrorKind::InvalidInput);
    const std::vector<FieldPeaks> backwards{{200.0, pl}, {100.0, pl}};
    CHECK(kind_of([&] { extract_asymptotic(backwards); }) == ErrorKind::InvalidInput);
    PeakList empty = pl;
    empty.peaks.clear();
    const std::vector<FieldPeaks> none{{100.0, empty}, {200.0, empty}};
    CHECK(kind_of([&] { extract_asymptotic(none); }) == ErrorKind::MissingPeak);
  }

  TEST_CASE("signs: all four combinations at h1 = 1") {
    const Magnitudes m{6, 7, 4, 5};
    for (int s1 : {1, -1})
      for (int s2 : {1, -1}) {
        const ChainParams p{0.0, 6.0, 7.0, s1 * 4.0, s2 * 5.0};
        const TimeTrace t = trace_at(p, 1.0, all_up(), 20.0, 40.0);
        const SignDecision d = determine_signs(t, 1.0, m);
        CHECK(d.signJ1 == s1);
        CHECK(d.signJ2 == s2);
        CHECK(d.margin > d.threshold);
      }
  }

  TEST_CASE("signs: the (-,-) chain gives the negated trace") {
    const TimeTrace pp = trace_at(kChain, 1.0, all_up(), 20.0, 40.0);
    const TimeTrace mm = trace_at({0.0, 6.0, 7.0, -4.0, -5.0}, 1.0, all_up(), 20.0, 40.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < pp.samples.size(); ++k) worst = std::max(worst, std::abs(pp.samples[k] + mm.samples[k]));
    CHECK(worst < 1e-10);
    const SignDecision d = determine_signs(pp, 1.0, {6, 7, 4, 5});
    CHECK(d.signJ1 == 1);
    CHECK(d.signJ2 == 1);
  }

  TEST_CASE("signs: noise 0.01 and positive rescaling") {
    const Magnitudes m{6, 7, 4, 5};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const ChainParams p{0.0, 6.0, 7.0, -4.0, 5.0};
      TimeTrace t = trace_at(p, 1.0, all_up(), 20.0, 40.0, {0.01, seed});
      const SignDecision d = determine_signs(t, 1.0, m);
      CHECK(d.signJ1 == -1);
      CHECK(d.signJ2 == 1);
      CHECK(d.noise_estimate == doctest::Approx(0.01).epsilon(0.2));
      for (double& s : t.samples) s *= 3.7;
      const SignDecision scaled = determine_signs(t, 1.0, m);
      CHECK(scaled.signJ1 == d.signJ1);
      CHECK(scaled.signJ2 == d.signJ2);
    }
  }

  TEST_CASE("signs: J2 = 0 is ambiguous, h1 = 0 is rejected") {
    const ChainParams p{0.0, 6.0, 7.0, 4.0, 0.0};
    const TimeTrace t = trace_at(p, 1.0, all_up(), 20.0, 40.0);
    CHECK(kind_of([&] { determine_signs(t, 1.0, {6, 7, 4, 0}); }) == ErrorKind::AmbiguousSign);
    CHECK(kind_of([&] { determine_signs(t, 0.0, {6, 7, 4, 5}); }) == ErrorKind::InvalidInput);
  }

  TEST_CASE("refine: exact peaks are a fixed point") {
    std::vector<SweepPeaks> sweep;
    for (double h1 : {1.0, 3.0, 5.0}) sweep.push_back({h1, all_up(), exact_peaks(kChain.with_h1(h1), all_up(), 200.0)});
    const EstimateResult r = refine(from_truth(kChain), sweep);
    CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) < 1e-9);
    CHECK(r.residual_rms < 1e-9);
    REQUIRE(r.diagnostics.refine.has_value());
    CHECK(r.diagnostics.refine->residual_count >= 4);
  }

  TEST_CASE("refine: 2% perturbation recovered from simulated sweeps") {
    std::vector<SweepPeaks> sweep;
    for (double h1 : {1.0, 3.0, 5.0}) {
      sweep.push_back({h1, all_up(), peaks_of(trace_at(kChain, h1, all_up(), 200.0), 1e-5)});
    }
    EstimateResult start = from_truth(kChain);
    start.h2 *= 1.02;
    start.h3 *= 0.98;
    start.absJ1 *= 1.02;
    start.absJ2 *= 0.98;
    const EstimateResult r = refine(start, sweep);
    CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) < 1e-4);
    CHECK(r.diagnostics.refine->improved);
    CHECK(r.diagnostics.refine->rms_after <= r.diagnostics.refine->rms_before);
    CHECK(r.signJ1 == 1);
    CHECK(r.signJ2 == 1);
  }

  TEST_CASE("refine: jittered peaks") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> jitter(0.0, 0.01);
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<SweepPeaks> sweep;
      for (double h1 : {1.0, 3.0, 5.0}) {
        PeakList pl = exact_peaks(kChain.with_h1(h1), all_up(), 200.0);
        for (auto& p : pl.peaks) p.omega += jitter(gen);
        sweep.push_back({h1, all_up(), pl});
      }
      const EstimateResult r = refine(from_truth(kChain), sweep);
      CHECK(r.residual_rms > 0.003);
      CHECK(r.residual_rms < 0.02);
      CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) < 5e-3);
    }
  }

  TEST_CASE("refine: a start it cannot improve comes back unchanged") {
    std::vector<SweepPeaks> sweep{{1.0, all_up(), exact_peaks(kChain.with_h1(1.0), all_up(), 200.0)}};
    sweep[0].peaks.peaks.resize(1);
    const EstimateResult r = refine(from_truth(kChain), sweep);
    CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) == 0.0);
    CHECK_FALSE(r.diagnostics.refine->note.empty());
    CHECK(kind_of([] { refine(EstimateResult{}, std::vector<SweepPeaks>{}); }) == ErrorKind::InvalidInput);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("noiseless chain (6, 7, 4, 5)") {
    SyntheticProvider prov(kChain);
    const EstimateResult r = run_pipeline(prov);
    CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) < 1e-3);
    CHECK(r.signJ1 == 1);
    CHECK(r.signJ2 == 1);
    REQUIRE(r.diagnostics.asymptotic.has_value());
    REQUIRE(r.diagnostics.zero_field.has_value());
    REQUIRE(r.diagnostics.signs.has_value());
    // Every matched peak is reproduced by the estimate within the reported residual.
    CHECK(r.residual_max < 1e-6);
  }

  TEST_CASE("negative J1 is detected") {
    SyntheticProvider prov({0.0, 6.0, 7.0, -4.0, 5.0});
    const EstimateResult r = run_pipeline(prov);
    CHECK(r.signJ1 == -1);
    CHECK(r.signJ2 == 1);
    CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) < 1e-3);
  }

  TEST_CASE("J1 = 0 is unidentifiable") {
    SyntheticProvider prov({0.0, 6.0, 7.0, 0.0, 5.0});
    CHECK(kind_of([&] { run_pipeline(prov); }) == ErrorKind::Unidentifiable);
  }

  TEST_CASE("zero-field-first strategy") {
    SyntheticProvider prov({0.0, 6.0, 7.0, 4.0, -5.0});
    PipelineOptions o;
    o.strategy = Strategy::ZeroFieldFirst;
    const EstimateResult r = run_pipeline(prov, o);
    CHECK(max_rel(r.magnitudes(), 6, 7, 4, 5) < 1e-3);
    CHECK(r.signJ1 == 1);
    CHECK(r.signJ2 == -1);
    CHECK(parse_strategy("zero-field-first") == Strategy::ZeroFieldFirst);
    CHECK(kind_of([] { parse_strategy("sideways"); }) == ErrorKind::InvalidInput);
  }

  TEST_CASE("same seed, same result") {
    SyntheticProvider a(kChain, 0.01, 9), b(kChain, 0.01, 9);
    const EstimateResult ra = run_pipeline(a), rb = run_pipeline(b);
    CHECK(ra.h2 == rb.h2);
    CHECK(ra.h3 == rb.h3);
    CHECK(ra.absJ1 == rb.absJ1);
    CHECK(ra.absJ2 == rb.absJ2);
    CHECK(ra.residual_rms == rb.residual_rms);
  }

  TEST_CASE("recording provider keeps every acquisition") {
    SyntheticProvider inner(kChain);
    RecordingProvider rec(inner);
    run_pipeline(rec);
    bool zero = false, sign = false;
    for (const auto& [req, t] : rec.records()) {
      zero = zero || (req.h1 == 0.0 && req.init == "+uu");
      sign = sign || req.stage == "sign";
      CHECK(t.samples.size() == static_cast<std::size_t>(std::llround(req.duration / req.dt)));
    }
    CHECK(zero);
    CHECK(sign);
  }

  TEST_CASE("random chains are identified") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> h(1.0, 10.0), j(0.5, 8.0), coin(0.0, 1.0);
    for (int i = 0; i < 6; ++i) {
      const double j1 = j(gen) * (coin(gen) < 0.5 ? -1 : 1), j2 = j(gen) * (coin(gen) < 0.5 ? -1 : 1);
      const ChainParams p{0.0, h(gen), h(gen), j1, j2};
      CAPTURE(p.h2);
      CAPTURE(p.h3);
      CAPTURE(p.J1);
      CAPTURE(p.J2);
      SyntheticProvider prov(p);
      const EstimateResult r = run_pipeline(prov);
      CHECK(max_rel(r.magnitudes(), p.h2, p.h3, p.J1, p.J2) < 1e-3);
      CHECK(r.signJ1 * p.J1 > 0);
      CHECK(r.signJ2 * p.J2 > 0);
    }
  }
}
