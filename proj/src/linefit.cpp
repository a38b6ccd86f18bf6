#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "spinprobe/error.hpp"
#include "spinprobe/signal.hpp"

namespace spinprobe {

namespace {

// Fixed chunking keeps the summation order, and so the result, independent
// of the thread count.
constexpr std::size_t kChunks = 64;

struct Normal {
  Eigen::MatrixXd A;
  Eigen::VectorXd g;
  double sse = 0.0;
};

// Parameters: c, then (a_j, b_j, w_j) per line.
// model(t) = c + sum_j a_j cos(w_j t) + b_j sin(w_j t), t centred on the window.
Normal accumulate(const TimeTrace& trace, double tc, const Eigen::VectorXd& x, bool linear_only) {
  const std::size_t K = static_cast<std::size_t>(x.size() - 1) / 3;
  const Eigen::Index P = linear_only ? static_cast<Eigen::Index>(2 * K + 1) : x.size();
  const std::size_t n = trace.samples.size();
  std::vector<Normal> parts(kChunks);

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < kChunks; ++c) {
    Normal& part = parts[c];
    part.A = Eigen::MatrixXd::Zero(P, P);
    part.g = Eigen::VectorXd::Zero(P);
    Eigen::VectorXd row(P);
    const std::size_t lo = n * c / kChunks, hi = n * (c + 1) / kChunks;
    for (std::size_t k = lo; k < hi; ++k) {
      const double t = trace.time(k) - tc;
      double model = x(0);
      row(0) = 1.0;
      for (std::size_t j = 0; j < K; ++j) {
        const Eigen::Index base = static_cast<Eigen::Index>(1 + 3 * j);
        const double cs = std::cos(x(base + 2) * t), sn = std::sin(x(base + 2) * t);
        model += x(base) * cs + x(base + 1) * sn;
        if (linear_only) {
          row(static_cast<Eigen::Index>(1 + 2 * j)) = cs;
          row(static_cast<Eigen::Index>(2 + 2 * j)) = sn;
        } else {
          row(base) = cs;
          row(base + 1) = sn;
          row(base + 2) = t * (x(base + 1) * cs - x(base) * sn);
        }
      }
      const double r = trace.samples[k] - model;
      part.A.selfadjointView<Eigen::Lower>().rankUpdate(row);
      part.g += r * row;
      part.sse += r * r;
    }
  }

  Normal out{Eigen::MatrixXd::Zero(P, P), Eigen::VectorXd::Zero(P), 0.0};
  for (const auto& part : parts) {
    out.A += part.A;
    out.g += part.g;
    out.sse += part.sse;
  }
  out.A = out.A.selfadjointView<Eigen::Lower>();
  return out;
}

double sse(const TimeTrace& trace, double tc, const Eigen::VectorXd& x) {
  const std::size_t K = static_cast<std::size_t>(x.size() - 1) / 3;
  const std::size_t n = trace.samples.size();
  std::vector<double> parts(kChunks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < kChunks; ++c) {
    const std::size_t lo = n * c / kChunks, hi = n * (c + 1) / kChunks;
    for (std::size_t k = lo; k < hi; ++k) {
      const double t = trace.time(k) - tc;
      double model = x(0);
      for (std::size_t j = 0; j < K; ++j) {
        const Eigen::Index base = static_cast<Eigen::Index>(1 + 3 * j);
        model += x(base) * std::cos(x(base + 2) * t) + x(base + 1) * std::sin(x(base + 2) * t);
      }
      parts[c] += std::pow(trace.samples[k] - model, 2);
    }
  }
  double s = 0.0;
  for (double p : parts) s += p;
  return s;
}

}  // namespace

PeakList fit_line_frequencies(const TimeTrace& trace, const PeakList& peaks, int max_iterations) {
  trace.validate();
  PeakList out = peaks;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < peaks.peaks.size(); ++i) {
    if (peaks.peaks[i].omega > 2.0 * peaks.resolution) idx.push_back(i);
  }
  if (idx.empty()) return out;
  const std::size_t K = idx.size();
  if (trace.samples.size() < 3 * K + 1) {
    throw Error(ErrorKind::InvalidInput, "trace too short to fit " + std::to_string(K) + " lines");
  }
  const double tc = trace.time(0) + 0.5 * trace.dt * static_cast<double>(trace.samples.size() - 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * K + 1));
  for (std::size_t j = 0; j < K; ++j) x(static_cast<Eigen::Index>(3 + 3 * j)) = peaks.peaks[idx[j]].omega;

  // Amplitudes at the DFT frequencies first.
  {
    const Normal lin = accumulate(trace, tc, x, true);
    const Eigen::VectorXd sol = lin.A.ldlt().solve(lin.g);
    x(0) = sol(0);
    for (std::size_t j = 0; j < K; ++j) {
      x(static_cast<Eigen::Index>(1 + 3 * j)) = sol(static_cast<Eigen::Index>(1 + 2 * j));
      x(static_cast<Eigen::Index>(2 + 3 * j)) = sol(static_cast<Eigen::Index>(2 + 2 * j));
    }
  }

  double lambda = 1e-6;
  for (int it = 0; it < max_iterations; ++it) {
    const Normal ne = accumulate(trace, tc, x, false);
    bool accepted = false;
    Eigen::VectorXd step;
    while (lambda < 1e10) {
      Eigen::MatrixXd A = ne.A;
      for (Eigen::Index j = 0; j < A.rows(); ++j) A(j, j) *= 1.0 + lambda;
      step = A.ldlt().solve(ne.g);
      const Eigen::VectorXd xn = x + step;
      if (xn.allFinite() && sse(trace, tc, xn) < ne.sse) {
        x = xn;
        accepted = true;
        lambda = std::max(lambda / 10.0, 1e-12);
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
    double move = 0.0;
    for (std::size_t j = 0; j < K; ++j) move = std::max(move, std::abs(step(static_cast<Eigen::Index>(3 + 3 * j))));
    if (move <= 1e-13 * peaks.resolution) break;
  }

  // A line that wandered off its peak was not resolved by the fit (noise, or
  // a weak line merged into a neighbour); it keeps the DFT estimate.
  for (std::size_t j = 0; j < K; ++j) {
    const double w = x(static_cast<Eigen::Index>(3 + 3 * j));
    if (std::abs(w - peaks.peaks[idx[j]].omega) <= 0.5 * peaks.resolution) out.peaks[idx[j]].omega = w;
  }
  return out;
}

}  // namespace spinprobe
