#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "spinprobe/dynamics.hpp"

namespace spinprobe {

enum class Window { Rect, Hann };

const char* to_string(Window w);
Window parse_window(std::string_view name);

// Periodic window of length n.
std::vector<double> window_weights(Window w, std::size_t n);

// Magnitude spectrum normalized by the window sum: a constant c shows up as
// |c| at omega = 0 and a cos(w t) as a/2 at w.
struct Spectrum {
  std::vector<double> omegas;      // uniform, 0 .. pi/dt
  std::vector<double> magnitudes;
  Window window = Window::Hann;
  int zero_pad = 1;
  double duration = 0.0;           // T = N dt
  double resolution = 0.0;         // 2 pi / T
  double bin_spacing = 0.0;        // resolution / zero_pad
};

// FFT of the windowed, zero-padded trace. zero_pad in {1, 2, 4, 8}.
Spectrum dft(const TimeTrace& trace, Window window = Window::Hann, int zero_pad = 4);

// The same normalized magnitude, summed directly at arbitrary frequencies.
std::vector<double> spectrum_at(const TimeTrace& trace, Window window, std::span<const double> omegas,
                                Backend backend = Backend::OpenMP);

struct Peak {
  double omega = 0.0;
  double magnitude = 0.0;
  double quality = 0.0;  // magnitude over the median spectral floor
};

struct PeakList {
  std::vector<Peak> peaks;  // sorted by omega
  double duration = 0.0;
  double resolution = 0.0;
  Window window = Window::Hann;
  int zero_pad = 1;

  // Frequencies of peaks above min_omega (drops the DC peak).
  std::vector<double> frequencies(double min_omega = 0.0) const;
};

// Bins that are strict local maxima, dominate their main-lobe neighbourhood
// (1 bin rect, 2 bins hann, times zero_pad) and reach rel_threshold of the
// global maximum. Frequencies refined with a parabola through the three
// log-magnitudes around the bin.
PeakList find_peaks(const Spectrum& spec, double rel_threshold = 0.02);

// Least-squares fit of a constant plus one sinusoid per peak above two
// resolution cells, started from the peak frequencies. Leakage from
// neighbouring lines biases the spectral estimate; the joint fit does not
// have that bias. A line whose fitted frequency leaves its peak by more than
// half a cell keeps the spectral value.
PeakList fit_line_frequencies(const TimeTrace& trace, const PeakList& peaks, int max_iterations = 50);

// 2 (|J1| + |J2| + |h1| + |h2| + |h3|): twice the 1-norm bound on ||H||,
// which bounds every |eps_m - eps_n|.
double omega_max_bound(const ChainParams& p);
// Largest dt with 4 samples per period of omega_bound.
double nyquist_dt(double omega_bound);
inline double nyquist_dt(const ChainParams& p) { return nyquist_dt(omega_max_bound(p)); }

struct AcquireOptions {
  double t_initial = 8.0;
  double t_max = 4096.0;
  Window window = Window::Hann;
  int zero_pad = 4;
  double rel_threshold = 0.02;
  double min_quality = 0.0;  // peaks below this quality are not counted
};

struct Acquisition {
  PeakList peaks;
  double duration = 0.0;
  std::vector<double> durations;
  std::vector<std::size_t> peak_counts;
};

// Produces a trace covering the requested observation window.
using TraceSource = std::function<TimeTrace(double duration)>;

// Doubles the window until the peak count is unchanged over two consecutive
// doublings and the resolution is at most target_resolution.
Acquisition adaptive_acquire(const TraceSource& source, double target_resolution,
                             const AcquireOptions& options = {});

Acquisition adaptive_acquire(const ChainParams& p, const StateVector& psi0, double target_resolution,
                             const AcquireOptions& options = {}, NoiseSpec noise = {});

}  // namespace spinprobe
