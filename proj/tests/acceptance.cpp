// One PASS/FAIL line per acceptance property. Exit status is the number of failures.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spinprobe/dynamics.hpp"
#include "spinprobe/error.hpp"
#include "spinprobe/pipeline.hpp"
#include "spinprobe/spectral.hpp"

using namespace spinprobe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

ChainParams from(const oracle::Draw& d) { return {d.h1, d.h2, d.h3, d.J1, d.J2}; }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

Outcome zero_field_amplitude_values() {
  const ZeroFieldAmplitudes z = zero_field_amplitudes(reference_chain(0.0));
  const double dev = std::max({std::abs(z.C - 0.5984), std::abs(z.A0 - 0.05525), std::abs(z.B0 - 0.3464)});
  const double sum = std::abs(z.C + z.A0 + z.B0 - 1.0);
  return {dev < 5e-4 && sum < 1e-10,
          fmt("C=%.6f A0=%.6f B0=%.6f max dev %.2e, |sum-1| %.1e", z.C, z.A0, z.B0, dev, sum)};
}

Outcome vanishing_amplitudes() {
  std::mt19937_64 gen(101);
  double worst = 0.0, worst_sum = 0.0;
  for (int i = 0; i < 100; ++i) {
    const EigenSystem es = diagonalize(from(oracle::random_draw(gen)), Labeling::ClosedForm);
    const PairAmplitudes a = pair_amplitudes(es, all_up());
    for (double v : {a.A[4][1], a.A[3][2], a.B[2][1], a.B[3][1], a.B[4][2], a.B[4][3]})
      worst = std::max(worst, std::abs(v));
    double total = a.C;
    for (int m = 1; m <= 4; ++m) {
      total += a.A_diag[m];
      for (int n = 1; n < m; ++n) total += a.A[m][n] + a.B[m][n];
    }
    worst_sum = std::max(worst_sum, std::abs(total));
  }
  return {worst < 1e-10 && worst_sum < 1e-10,
          fmt("100 draws: max vanishing amplitude %.1e, max |sum rule| %.1e", worst, worst_sum)};
}

Outcome spectral_symmetry() {
  std::mt19937_64 gen(102);
  double mirror = 0.0, rel = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ChainParams p = from(oracle::random_draw(gen));
    const EigenSystem sorted = diagonalize(p);
    for (int k = 0; k < 4; ++k) mirror = std::max(mirror, std::abs(sorted.eps[k] + sorted.eps[7 - k]));
    const auto& e = diagonalize(p, Labeling::ClosedForm).eps;
    rel = std::max({rel, std::abs((e[0] + e[3]) - (e[1] + e[2])), std::abs((e[0] - e[2]) - (e[1] - e[3])),
                    std::abs((e[0] - e[1]) - (e[2] - e[3]))});
  }
  double closed = 0.0;
  std::string failures;
  for (double h1 : {0.5, 1.0, 2.0, 5.0, 10.0, 30.0}) {
    try {
      const ChainParams p = reference_chain(h1);
      const auto cf = closed_form_energies(p);
      const auto& e = diagonalize(p, Labeling::ClosedForm).eps;
      for (int k = 0; k < 4; ++k) closed = std::max({closed, std::abs(e[k] - cf.eps[k]), std::abs(e[7 - k] + cf.eps[k])});
    } catch (const Error& err) {
      failures += fmt(" [h1=%g %s: %s]", h1, to_string(err.kind()), err.what());
    }
  }
  return {mirror < 1e-10 && rel < 1e-9 && closed < 1e-8 && failures.empty(),
          fmt("mirror %.1e, sum/difference relations %.1e, closed form vs numeric %.1e", mirror, rel, closed) +
              (failures.empty() ? std::string(", no branch failures") : ", branch failures:" + failures)};
}

// Gap ratios between successive doublings of h1: ~4 for 1/h1^2, ~2 for 1/h1.
Outcome asymptotics() {
  const double P = std::sqrt(194.0), M = std::sqrt(26.0);
  std::vector<double> conv, div;
  for (double h1 : {50.0, 100.0, 200.0, 400.0}) {
    const auto& e = diagonalize(reference_chain(h1), Labeling::ClosedForm).eps;
    conv.push_back(std::abs(e[0] - e[3] - 2.0 * P));
    div.push_back(std::abs(e[0] + e[1] - 2.0 * h1 - (P + M)));
  }
  bool ok = true;
  std::string ratios;
  for (std::size_t k = 1; k < conv.size(); ++k) {
    const double rc = conv[k - 1] / conv[k], rd = div[k - 1] / div[k];
    ok = ok && rc > 4.0 / 3.0 && rc < 12.0 && rd > 2.0 / 3.0 && rd < 6.0;
    ratios += fmt(" %.3f/%.3f", rc, rd);
  }
  return {ok, "gap ratios per doubling (convergent/divergent):" + ratios +
                  fmt("; gaps at h1=400: %.2e, %.2e", conv.back(), div.back())};
}

Outcome recovery() {
  const int signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  bool ok = true;
  double worst_clean = 0.0, worst_noisy = 0.0;
  std::string bad;
  for (const auto& s : signs) {
    const ChainParams truth{0.0, 6.0, 7.0, 4.0 * s[0], 5.0 * s[1]};
    for (double sigma : {0.0, 0.01}) {
      SyntheticProvider prov(truth, sigma, 20240);
      const EstimateResult r = run_pipeline(prov);
      const double err = std::max({std::abs(r.h2 / 6.0 - 1.0), std::abs(r.h3 / 7.0 - 1.0),
                                   std::abs(r.absJ1 / 4.0 - 1.0), std::abs(r.absJ2 / 5.0 - 1.0)});
      const bool signs_ok = r.signJ1 == s[0] && r.signJ2 == s[1];
      const bool pass = signs_ok && err < (sigma == 0.0 ? 1e-3 : 1e-2);
      (sigma == 0.0 ? worst_clean : worst_noisy) = std::max(sigma == 0.0 ? worst_clean : worst_noisy, err);
      if (!pass) bad += fmt(" [signs %+d%+d sigma %g: err %.2e, got signs %+d%+d]", s[0], s[1], sigma, err, r.signJ1, r.signJ2);
      ok = ok && pass;
    }
  }
  return {ok, fmt("4 sign combinations: worst rel err %.2e noiseless, %.2e at sigma=0.01", worst_clean, worst_noisy) + bad};
}

Outcome gauge_and_sign() {
  const TimeGrid g = TimeGrid::until(20.0, 0.01);
  std::mt19937_64 gen(106);
  double gauge = 0.0, flip = 0.0;
  for (int i = 0; i < 10; ++i) {
    const ChainParams p = i == 0 ? reference_chain(1.0) : from(oracle::random_draw(gen));
    ChainParams q = p;
    q.alpha2 = 0.7;
    q.alpha3 = -1.2;
    for (const char* init : {"uuu", "+uu"})
      gauge = std::max(gauge, max_abs_diff(trace_sx1(p, basis_state(init), g).samples,
                                           trace_sx1(q, basis_state(init), g).samples));
    ChainParams n = p;
    n.J1 = -p.J1;
    n.J2 = -p.J2;
    const auto a = trace_sx1(p, all_up(), g).samples, b = trace_sx1(n, all_up(), g).samples;
    for (std::size_t k = 0; k < a.size(); ++k) flip = std::max(flip, std::abs(a[k] + b[k]));
  }
  return {gauge < 1e-10 && flip < 1e-10, fmt("10 chains: gauge diff %.1e, (J1,J2)+(-J1,-J2) sum %.1e", gauge, flip)};
}

Outcome degeneracy_and_crossing() {
  const EigenSystem es = diagonalize(reference_chain(0.0));
  double pair_gap = 0.0;
  for (int k = 0; k < 8; k += 2) pair_gap = std::max(pair_gap, std::abs(es.eps[k] - es.eps[k + 1]));
  bool doubled = es.clusters.size() == 4;
  for (const auto& c : es.clusters) doubled = doubled && c.multiplicity == 2;

  const LevelCrossing x = find_level_crossing(reference_chain(), 1e-6, 20.0);
  const Matrix8 par = parity_operator();
  const double pe = expectation(par, x.even_state), po = expectation(par, x.odd_state);
  const double eps4 = closed_form_energies(reference_chain(x.h1)).eps[3];
  const bool ok = doubled && pair_gap < 1e-8 && x.h1 > 0.0 && x.h1 <= 20.0 && std::abs(pe - 1.0) < 1e-8 &&
                  std::abs(po + 1.0) < 1e-8;
  return {ok, fmt("h1=0 pair gap %.1e in %zu clusters; eps4 = 0 at h1=%.10f (closed-form eps4 %.1e), parities %+.12f %+.12f",
                  pair_gap, es.clusters.size(), x.h1, eps4, pe, po)};
}

Outcome j1_independence() {
  double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
  for (int i = 0; i <= 40; ++i) {
    ChainParams p = reference_chain(1e4);
    p.J1 = 0.1 + (8.0 - 0.1) * i / 40.0;
    const auto& e = diagonalize(p, Labeling::ClosedForm).eps;
    const double w[2] = {e[0] - e[3], e[1] - e[2]};
    for (int k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], w[k]);
      hi[k] = std::max(hi[k], w[k]);
    }
  }
  const double spread = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  return {spread < 1e-4, fmt("J1 in [0.1, 8], 41 points: spreads %.2e and %.2e (lines near %.6f, %.6f)", hi[0] - lo[0],
                             hi[1] - lo[1], lo[0], lo[1])};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"zero-field amplitudes", zero_field_amplitude_values},
      {"vanishing amplitude set and sum rule", vanishing_amplitudes},
      {"spectral symmetry and closed form", spectral_symmetry},
      {"large-field asymptotics", asymptotics},
      {"end-to-end recovery", recovery},
      {"gauge and sign identities", gauge_and_sign},
      {"degeneracy and level crossing", degeneracy_and_crossing},
      {"J1-independence at large h1", j1_independence},
  };
  int failed = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    try {
      o = fn();
    } catch (const Error& e) {
      o = {false, std::string("threw ") + to_string(e.kind()) + ": " + e.what()};
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
