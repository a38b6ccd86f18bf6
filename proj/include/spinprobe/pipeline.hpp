#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spinprobe/estimate.hpp"

namespace spinprobe {

// One measurement the pipeline asks for: a <x1(t)> trace from state `init`
// ("uuu" or "+uu") at transverse field h1, sampled every dt over `duration`.
struct TraceRequest {
  std::string stage;
  double h1 = 0.0;
  std::string init;
  double duration = 0.0;
  double dt = 0.0;
};

class TraceProvider {
 public:
  virtual ~TraceProvider() = default;
  virtual TimeTrace acquire(const TraceRequest& request) = 0;
};

// Simulated experiment on known couplings. Each acquisition draws noise from
// its own stream, seeded from (seed, acquisition index).
class SyntheticProvider : public TraceProvider {
 public:
  SyntheticProvider(ChainParams truth, double noise_sigma = 0.0, std::uint64_t seed = 42);
  TimeTrace acquire(const TraceRequest& request) override;

 private:
  ChainParams truth_;
  double sigma_;
  std::uint64_t seed_;
  std::uint64_t count_ = 0;
};

// Forwards to another provider and keeps every (request, trace) pair.
class RecordingProvider : public TraceProvider {
 public:
  explicit RecordingProvider(TraceProvider& inner) : inner_(inner) {}
  TimeTrace acquire(const TraceRequest& request) override;
  const std::vector<std::pair<TraceRequest, TimeTrace>>& records() const { return records_; }

 private:
  TraceProvider& inner_;
  std::vector<std::pair<TraceRequest, TimeTrace>> records_;
};

enum class Strategy {
  LargeFieldFirst,  // converge (P, M) at large h1, then h1 = 0
  ZeroFieldFirst,   // h1 = 0 first, then sweep h1 upward from 2 sqrt(S0)
};

const char* to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct PipelineOptions {
  Strategy strategy = Strategy::LargeFieldFirst;
  double prior_scale = 10.0;        // rough upper bound on |h2|, |h3|, |J1|, |J2|
  double trace_duration = 200.0;    // observation window for peak measurements
  double target_accuracy = 5e-4;    // on P and M; stop once they drift < 4x this
  int max_field_steps = 6;          // h1 doublings in the large-field stage
  double sign_h1 = 1.0;
  double sign_duration = 20.0;
  std::vector<double> sweep_h1{1.0, 3.0, 5.0};
  bool refine = true;
  Window window = Window::Hann;
  int zero_pad = 4;
  double rel_threshold = 1e-7;      // of the strongest oscillating line; min_quality guards noise
  double min_quality = 10.0;
  double flat_floor = 1e-10;        // rms below this after the mean goes: no oscillation
  bool fit_lines = true;            // time-domain fit of the peak frequencies
  double feature_tolerance = 1e-4;  // relative slack for the inversion's squares
  SignOptions signs;
};

// Sampling step for traces at field h1 under the prior scale.
double pipeline_dt(double h1, double prior_scale);

EstimateResult run_pipeline(TraceProvider& provider, const PipelineOptions& options = {});

}  // namespace spinprobe
