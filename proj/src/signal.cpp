#include "spinprobe/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include "spinprobe/error.hpp"
#include "spinprobe/kernels.hpp"

namespace spinprobe {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

int mainlobe_half_width(Window w) { return w == Window::Hann ? 2 : 1; }

std::vector<double> windowed(const TimeTrace& trace, Window window, double& norm) {
  const auto w = window_weights(window, trace.samples.size());
  norm = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> x(trace.samples.size());
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = w[n] * trace.samples[n];
  return x;
}

}  // namespace

const char* to_string(Window w) { return w == Window::Hann ? "hann" : "rect"; }

Window parse_window(std::string_view name) {
  if (name == "hann") return Window::Hann;
  if (name == "rect") return Window::Rect;
  throw Error(ErrorKind::InvalidInput, "unknown window '" + std::string(name) + "' (use hann or rect)");
}

std::vector<double> window_weights(Window w, std::size_t n) {
  std::vector<double> out(n, 1.0);
  if (w == Window::Hann) {
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
  }
  return out;
}

Spectrum dft(const TimeTrace& trace, Window window, int zero_pad) {
  if (zero_pad != 1 && zero_pad != 2 && zero_pad != 4 && zero_pad != 8) {
    throw Error(ErrorKind::InvalidInput, "zero_pad_factor must be 1, 2, 4 or 8");
  }
  if (trace.samples.size() < 8) {
    throw Error(ErrorKind::InvalidInput, "trace needs at least 8 samples for a spectrum");
  }
  trace.validate();

  double norm = 0.0;
  const std::vector<double> x = windowed(trace, window, norm);
  const std::size_t len = x.size() * static_cast<std::size_t>(zero_pad);
  const std::size_t bins = len / 2 + 1;

  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(len));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(bins));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in.get(), out.get(), FFTW_ESTIMATE);
  }
  std::fill(in.get(), in.get() + len, 0.0);
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  Spectrum s;
  s.window = window;
  s.zero_pad = zero_pad;
  s.duration = trace.duration();
  s.resolution = 2.0 * std::numbers::pi / s.duration;
  s.bin_spacing = 2.0 * std::numbers::pi / (static_cast<double>(len) * trace.dt);
  s.omegas.resize(bins);
  s.magnitudes.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.omegas[k] = s.bin_spacing * static_cast<double>(k);
    s.magnitudes[k] = std::hypot(out.get()[k][0], out.get()[k][1]) / norm;
  }
  return s;
}

std::vector<double> spectrum_at(const TimeTrace& trace, Window window, std::span<const double> omegas,
                                Backend backend) {
  trace.validate();
  double norm = 0.0;
  const std::vector<double> x = windowed(trace, window, norm);
  std::vector<double> out(omegas.size());
  if (backend == Backend::Serial) {
    kernels::direct_dft_serial(x, norm, trace.dt, omegas, out);
  } else {
    kernels::direct_dft_omp(x, norm, trace.dt, omegas, out);
  }
  return out;
}

std::vector<double> PeakList::frequencies(double min_omega) const {
  std::vector<double> out;
  for (const auto& p : peaks) {
    if (p.omega > min_omega) out.push_back(p.omega);
  }
  return out;
}

PeakList find_peaks(const Spectrum& spec, double rel_threshold) {
  if (spec.magnitudes.empty()) throw Error(ErrorKind::InvalidInput, "empty spectrum");
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "rel_threshold must lie in (0, 1)");
  }
  const auto& mag = spec.magnitudes;
  const auto n = static_cast<std::ptrdiff_t>(mag.size());
  // Mirror around DC so the zero-frequency bin can be a peak.
  auto at = [&](std::ptrdiff_t k) { return mag[static_cast<std::size_t>(k < 0 ? -k : k)]; };

  const double top = *std::max_element(mag.begin(), mag.end());
  std::vector<double> sorted(mag);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double floor = sorted[static_cast<std::size_t>(n / 2)] + 1e-15 * top;
  const double threshold = rel_threshold * top;
  const std::ptrdiff_t hw = static_cast<std::ptrdiff_t>(mainlobe_half_width(spec.window)) * spec.zero_pad;

  PeakList out;
  out.duration = spec.duration;
  out.resolution = spec.resolution;
  out.window = spec.window;
  out.zero_pad = spec.zero_pad;
  if (top <= 0.0) return out;

  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const double m = mag[static_cast<std::size_t>(k)];
    if (m < threshold) continue;
    if (k + 1 < n && !(m > mag[static_cast<std::size_t>(k + 1)])) continue;
    if (k > 0 && !(m > mag[static_cast<std::size_t>(k - 1)])) continue;
    bool dominant = true;
    for (std::ptrdiff_t j = k - hw; j <= k + hw && dominant; ++j) {
      if (j == k || j >= n) continue;
      if (at(j) > m) dominant = false;
    }
    if (!dominant) continue;

    double delta = 0.0;
    double peak_mag = m;
    if (k > 0 && k + 1 < n) {
      const double a = at(k - 1), c = at(k + 1);
      if (a > 0.0 && c > 0.0) {
        const double la = std::log(a), lb = std::log(m), lc = std::log(c);
        const double curv = la - 2.0 * lb + lc;
        if (curv < 0.0) {
          delta = std::clamp(0.5 * (la - lc) / curv, -0.5, 0.5);
          peak_mag = std::exp(lb - 0.25 * (la - lc) * delta);
        }
      }
    }
    out.peaks.push_back({spec.bin_spacing * (static_cast<double>(k) + delta), peak_mag, peak_mag / floor});
  }
  return out;
}

double omega_max_bound(const ChainParams& p) {
  return 2.0 * (std::abs(p.J1) + std::abs(p.J2) + std::abs(p.h1) + std::abs(p.h2) + std::abs(p.h3));
}

double nyquist_dt(double omega_bound) {
  if (!(omega_bound > 0.0)) throw Error(ErrorKind::InvalidInput, "omega bound must be positive");
  return 2.0 * std::numbers::pi / (4.0 * omega_bound);
}

Acquisition adaptive_acquire(const TraceSource& source, double target_resolution,
                             const AcquireOptions& options) {
  if (!(target_resolution > 0.0)) throw Error(ErrorKind::InvalidInput, "target resolution must be > 0");
  if (!(options.t_initial > 0.0)) throw Error(ErrorKind::InvalidInput, "initial window must be > 0");

  Acquisition acq;
  for (double window = options.t_initial;; window *= 2.0) {
    if (window > options.t_max) {
      throw Error(ErrorKind::ResolutionUnreachable,
                  "observation window would exceed the configured maximum of " +
                      std::to_string(options.t_max));
    }
    const TimeTrace trace = source(window);
    PeakList peaks = find_peaks(dft(trace, options.window, options.zero_pad), options.rel_threshold);
    std::erase_if(peaks.peaks, [&](const Peak& p) { return p.quality < options.min_quality; });

    acq.durations.push_back(trace.duration());
    acq.peak_counts.push_back(peaks.peaks.size());
    acq.duration = trace.duration();
    acq.peaks = std::move(peaks);

    const std::size_t n = acq.peak_counts.size();
    const bool stable = n >= 3 && acq.peak_counts[n - 1] == acq.peak_counts[n - 2] &&
                        acq.peak_counts[n - 2] == acq.peak_counts[n - 3];
    if (stable && acq.peaks.resolution <= target_resolution) return acq;
  }
}

Acquisition adaptive_acquire(const ChainParams& p, const StateVector& psi0, double target_resolution,
                             const AcquireOptions& options, NoiseSpec noise) {
  const double dt = nyquist_dt(p);
  auto source = [&](double window) {
    TimeGrid g;
    g.dt = dt;
    g.count = static_cast<std::size_t>(std::ceil(window / dt));
    return trace_sx1(p, psi0, g, noise);
  };
  return adaptive_acquire(source, target_resolution, options);
}

}  // namespace spinprobe
