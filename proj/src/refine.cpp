#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "spinprobe/error.hpp"
#include "spinprobe/estimate.hpp"

namespace spinprobe {

namespace {

// Lines weaker than this fraction of the strongest one are not expected to
// show up as peaks.
constexpr double kVisibleFraction = 1e-4;
// Hann main-lobe half width, in resolution cells.
constexpr double kBlendCells = 2.0;
// Later passes drop peaks whose residual exceeds this many times the median.
constexpr double kTrimFactor = 10.0;
constexpr int kPasses = 4;

std::vector<double> visible_lines(const ChainParams& p, const StateVector& psi0) {
  const LineSpectrum ls = analytic_spectrum(p, psi0);
  double top = 0.0;
  for (const auto& l : ls.lines) top = std::max(top, std::abs(l.amplitude));
  std::vector<double> out;
  for (const auto& l : ls.lines) {
    if (std::abs(l.amplitude) >= kVisibleFraction * top) out.push_back(l.omega);
  }
  return out;
}

struct Nearest {
  double offset = std::numeric_limits<double>::infinity();     // to the closest line
  double runner_up = std::numeric_limits<double>::infinity();  // distance to the next one
};

Nearest nearest(const std::vector<double>& lines, double omega) {
  Nearest n;
  for (double w : lines) {
    const double d = std::abs(omega - w);
    if (d < std::abs(n.offset)) {
      n.runner_up = std::abs(n.offset);
      n.offset = omega - w;
    } else if (d < n.runner_up) {
      n.runner_up = d;
    }
  }
  return n;
}

struct Residuals {
  std::vector<double> r;  // measured - predicted
  std::size_t skipped = 0;
};

// Over the peaks flagged in `mask` (flattened over the sweep). Without a
// mask, peaks within reach of a line are used, except blends: two lines
// inside one main lobe give a peak that belongs to neither. The selection is
// written to mask_out.
Residuals residuals(const ChainParams& p, std::span<const SweepPeaks> sweep, double reach_cells,
                    const std::vector<char>* mask, std::vector<char>* mask_out) {
  Residuals out;
  std::size_t idx = 0;
  for (const auto& entry : sweep) {
    const std::vector<double> lines = visible_lines(p.with_h1(entry.h1), entry.initial_state);
    const double res = entry.peaks.resolution;
    for (const auto& peak : entry.peaks.peaks) {
      const std::size_t i = idx++;
      if (!(peak.omega > 2.0 * res)) {
        if (mask_out) mask_out->push_back(0);
        continue;
      }
      const Nearest near = nearest(lines, peak.omega);
      bool use;
      if (mask) {
        use = (*mask)[i] != 0;
      } else {
        use = std::abs(near.offset) <= reach_cells * res && near.runner_up > kBlendCells * res;
        if (!use) ++out.skipped;
      }
      if (mask_out) mask_out->push_back(use ? 1 : 0);
      if (use) out.r.push_back(near.offset);
    }
  }
  return out;
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

ChainParams to_params(const Eigen::Vector4d& x, int s1, int s2) {
  return {0.0, std::abs(x(0)), std::abs(x(1)), s1 * std::abs(x(2)), s2 * std::abs(x(3))};
}

struct Lm {
  Eigen::Vector4d x;
  int iterations = 0;
};

// Levenberg-Marquardt, forward-difference Jacobian.
Lm levenberg_marquardt(Eigen::Vector4d x, int s1, int s2, std::span<const SweepPeaks> sweep,
                       const std::vector<char>& mask, int max_iterations) {
  auto eval = [&](const Eigen::Vector4d& v) {
    const Residuals res = residuals(to_params(v, s1, s2), sweep, 0.0, &mask, nullptr);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(res.r.data(), static_cast<Eigen::Index>(res.r.size())));
  };

  Lm out{x, 0};
  Eigen::VectorXd r = eval(x);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd J(r.size(), 4);
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d xp = x;
      const double h = 1e-7 * std::max(1.0, std::abs(x(j)));
      xp(j) += h;
      J.col(j) = (eval(xp) - r) / h;
    }
    const Eigen::Matrix4d A = J.transpose() * J;
    const Eigen::Vector4d g = J.transpose() * r;

    bool accepted = false;
    double new_cost = cost;
    Eigen::Vector4d step = Eigen::Vector4d::Zero();
    while (lambda < 1e12) {
      Eigen::Matrix4d Al = A;
      for (int j = 0; j < 4; ++j) Al(j, j) += lambda * std::max(A(j, j), 1e-12);
      step = Al.ldlt().solve(-g);
      const Eigen::Vector4d xn = (x + step).cwiseAbs();
      const Eigen::VectorXd rn = eval(xn);
      new_cost = rn.squaredNorm();
      if (new_cost < cost) {
        x = xn;
        r = rn;
        accepted = true;
        lambda = std::max(lambda / 3.0, 1e-12);
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
    const double gain = cost - new_cost;
    cost = new_cost;
    if (gain <= 1e-14 * cost || step.norm() <= 1e-13 * (1.0 + x.norm())) break;
  }
  out.x = x;
  return out;
}

}  // namespace

PeakResiduals peak_residuals(const ChainParams& p, std::span<const SweepPeaks> sweep, double reach_cells) {
  const Residuals res = residuals(p, sweep, reach_cells, nullptr, nullptr);
  PeakResiduals out;
  out.values = res.r;
  out.skipped = res.skipped;
  out.rms = rms(res.r);
  out.max = max_abs(res.r);
  return out;
}

EstimateResult refine(const EstimateResult& initial, std::span<const SweepPeaks> sweep,
                      const RefineOptions& options) {
  if (sweep.empty()) throw Error(ErrorKind::InvalidInput, "refinement needs at least one peak list");
  const int s1 = initial.signJ1, s2 = initial.signJ2;
  const Eigen::Vector4d x0(initial.h2, initial.h3, initial.absJ1, initial.absJ2);

  RefineReport report;
  EstimateResult out = initial;

  std::vector<char> wide;
  const Residuals start = residuals(initial.params(), sweep, options.reach_cells, nullptr, &wide);
  if (start.r.size() < 4) {
    report.residual_count = start.r.size();
    report.rms_before = report.rms_after = rms(start.r);
    report.note = "fewer matched peaks than parameters; estimate kept";
    out.residual_rms = report.rms_before;
    out.residual_max = max_abs(start.r);
    out.diagnostics.refine = report;
    return out;
  }

  // The first pass tolerates a rough start. Each later pass drops peaks far
  // out of line with the rest (a weak line displaced by a neighbour's
  // leakage, a sidelobe next to a line) and refits.
  std::vector<char> mask = wide;
  Lm final = levenberg_marquardt(x0, s1, s2, sweep, mask, options.max_iterations);
  for (int pass = 1; pass < kPasses; ++pass) {
    const Residuals cur = residuals(to_params(final.x, s1, s2), sweep, 0.0, &mask, nullptr);
    std::vector<double> a(cur.r.size());
    std::transform(cur.r.begin(), cur.r.end(), a.begin(), [](double x) { return std::abs(x); });
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
    const double cut = kTrimFactor * a[a.size() / 2];
    std::vector<char> next = mask;
    std::size_t k = 0, kept = 0;
    for (auto& m : next) {
      if (!m) continue;
      if (std::abs(cur.r[k++]) > cut) m = 0;
      else ++kept;
    }
    if (next == mask || kept < 4) break;
    mask = std::move(next);
    const int done = final.iterations;
    final = levenberg_marquardt(final.x, s1, s2, sweep, mask, options.max_iterations);
    final.iterations += done;
  }

  const Residuals before = residuals(initial.params(), sweep, 0.0, &mask, nullptr);
  const Residuals after = residuals(to_params(final.x, s1, s2), sweep, 0.0, &mask, nullptr);
  report.iterations = final.iterations;
  report.residual_count = after.r.size();
  report.rms_before = rms(before.r);
  report.rms_after = rms(after.r);
  report.improved = report.rms_after < report.rms_before;

  if (report.improved) {
    out.h2 = std::abs(final.x(0));
    out.h3 = std::abs(final.x(1));
    out.absJ1 = std::abs(final.x(2));
    out.absJ2 = std::abs(final.x(3));
    out.residual_rms = report.rms_after;
    out.residual_max = max_abs(after.r);
  } else {
    report.rms_after = report.rms_before;
    report.note = "no improvement within the iteration cap; estimate kept";
    out.residual_rms = report.rms_before;
    out.residual_max = max_abs(before.r);
  }
  out.diagnostics.refine = report;
  return out;
}

}  // namespace spinprobe
