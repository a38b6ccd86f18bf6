#include "commands.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "spinprobe/error.hpp"
#include "spinprobe/figures.hpp"
#include "spinprobe/io.hpp"
#include "spinprobe/pipeline.hpp"

namespace spinprobe::cli {

namespace {

struct ChainArgs {
  std::vector<double> h;
  std::vector<double> J;
  std::vector<double> alpha;
  std::string params_file;
};

void add_chain_options(CLI::App* app, ChainArgs& c) {
  app->add_option("--h", c.h, "transverse fields h1,h2,h3")->delimiter(',')->expected(3);
  app->add_option("--J", c.J, "couplings J1,J2")->delimiter(',')->expected(2);
  app->add_option("--alpha", c.alpha, "in-plane angles a2,a3 of h2, h3")->delimiter(',')->expected(2);
  app->add_option("--params", c.params_file, "params JSON {\"h\":[..],\"J\":[..]}");
}

// Without --h/--J/--params the reference chain (6, 7, 4, 5) at h1 = 0.
ChainParams chain_from(const ChainArgs& c) {
  if (!c.params_file.empty() && (!c.h.empty() || !c.J.empty())) {
    throw Error(ErrorKind::InvalidInput, "give either --params or --h/--J, not both");
  }
  ChainParams p = c.params_file.empty() ? reference_chain() : io::read_params_json(c.params_file);
  if (!c.h.empty()) {
    p.h1 = c.h[0];
    p.h2 = c.h[1];
    p.h3 = c.h[2];
  }
  if (!c.J.empty()) {
    p.J1 = c.J[0];
    p.J2 = c.J[1];
  }
  if (!c.alpha.empty()) {
    p.alpha2 = c.alpha[0];
    p.alpha3 = c.alpha[1];
  }
  if (!p.finite()) throw Error(ErrorKind::InvalidInput, "parameters must be finite");
  return p;
}

// --seed beats SPINPROBE_SEED beats the built-in default.
unsigned long long resolve_seed(const std::optional<unsigned long long>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SPINPROBE_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') {
      throw Error(ErrorKind::InvalidInput, std::string("SPINPROBE_SEED is not an unsigned integer: ") + env);
    }
    return v;
  }
  return kDefaultSeed;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    io::write_file_atomic(path, content);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-spin probe of a 3-spin transverse-field Ising chain: simulate, inspect, estimate."};
  app.name("spinprobe");
  app.set_help_flag("--help", "print this help and exit");  // -h would clash with --h
  app.require_subcommand(1);

  // simulate
  ChainArgs sim_chain;
  std::string sim_init = "uuu", sim_out;
  double sim_tmax = 50.0, sim_dt = 0.01, sim_noise = 0.0;
  std::optional<unsigned long long> sim_seed;
  auto* sim = app.add_subcommand("simulate", "write a <x1(t)> trace CSV");
  add_chain_options(sim, sim_chain);
  sim->add_option("--init", sim_init, "initial state, one of u d + per site (e.g. uuu, +uu)");
  sim->add_option("--tmax", sim_tmax, "last sample time");
  sim->add_option("--dt", sim_dt, "sampling step");
  sim->add_option("--noise", sim_noise, "Gaussian noise sigma");
  sim->add_option("--seed", sim_seed, "noise seed (default 42, or SPINPROBE_SEED)");
  sim->add_option("--out,-o", sim_out, "output CSV (stdout if omitted)");

  // spectrum
  std::string spec_trace, spec_window = "hann", spec_out, spec_peaks;
  int spec_zp = 4;
  double spec_threshold = 0.02;
  auto* spec = app.add_subcommand("spectrum", "spectrum CSV and peaks JSON of a trace CSV");
  spec->add_option("trace", spec_trace, "trace CSV")->required();
  spec->add_option("--window", spec_window, "hann or rect");
  spec->add_option("--zero-pad", spec_zp, "zero padding factor (1, 2, 4, 8)");
  spec->add_option("--threshold", spec_threshold, "peak threshold relative to the largest bin");
  spec->add_option("--out,-o", spec_out, "spectrum CSV");
  spec->add_option("--peaks", spec_peaks, "peaks JSON (stdout if omitted)");

  // estimate
  ChainArgs est_chain;
  std::string est_traces, est_out, est_dump, est_strategy = "large-field-first";
  double est_noise = 0.0;
  std::optional<unsigned long long> est_seed;
  bool est_no_refine = false;
  PipelineOptions est_opts;
  auto* est = app.add_subcommand("estimate", "recover the chain from synthetic or recorded traces");
  add_chain_options(est, est_chain);
  est->add_option("--traces", est_traces, "directory with manifest.json and trace CSVs");
  est->add_option("--noise", est_noise, "noise sigma for synthetic traces");
  est->add_option("--seed", est_seed, "noise seed (default 42, or SPINPROBE_SEED)");
  est->add_option("--strategy", est_strategy, "large-field-first or zero-field-first");
  est->add_option("--prior", est_opts.prior_scale, "rough bound on |h2|, |h3|, |J1|, |J2|");
  est->add_option("--duration", est_opts.trace_duration, "observation window per trace");
  est->add_option("--target", est_opts.target_accuracy, "accuracy goal for P and M");
  est->add_flag("--no-refine", est_no_refine, "skip the least-squares stage");
  est->add_option("--dump-traces", est_dump, "also write the acquired traces and a manifest here");
  est->add_option("--out,-o", est_out, "result JSON (stdout if omitted)");

  // figure
  ChainArgs fig_chain;
  std::string fig_id, fig_out;
  double fig_h1_max = 30.0, fig_h1_step = 0.1, fig_tmax = 20.0, fig_dt = 0.01, fig_sign_h1 = 1.0;
  auto* fig = app.add_subcommand("figure", "plot-ready CSV for one figure");
  fig->add_option("id", fig_id, "peaks_vs_h1, amplitudes_vs_h1, sign_traces or eigenenergies")
      ->required()
      ->check(CLI::IsMember({"peaks_vs_h1", "amplitudes_vs_h1", "sign_traces", "eigenenergies"}));
  add_chain_options(fig, fig_chain);
  fig->add_option("--h1-max", fig_h1_max, "largest h1 of the sweep");
  fig->add_option("--h1-step", fig_h1_step, "h1 step");
  fig->add_option("--sign-h1", fig_sign_h1, "sign_traces: field h1");
  fig->add_option("--tmax", fig_tmax, "sign_traces: last time");
  fig->add_option("--dt", fig_dt, "sign_traces: time step");
  fig->add_option("--out,-o", fig_out, "output CSV (stdout if omitted)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*sim) {
      if (!(sim_dt > 0.0) || !(sim_tmax >= 0.0)) throw Error(ErrorKind::InvalidInput, "need --dt > 0 and --tmax >= 0");
      TimeGrid g;
      g.dt = sim_dt;
      g.count = static_cast<std::size_t>(std::floor(sim_tmax / sim_dt + 1e-9)) + 1;
      const TimeTrace t =
          trace_sx1(chain_from(sim_chain), basis_state(sim_init), g, {sim_noise, resolve_seed(sim_seed)});
      emit(sim_out, io::format_trace_csv(t), out);
    } else if (*spec) {
      const TimeTrace t = io::read_trace_csv(spec_trace);
      const Spectrum s = dft(t, parse_window(spec_window), spec_zp);
      const PeakList pl = find_peaks(s, spec_threshold);
      if (!spec_out.empty()) io::write_file_atomic(spec_out, io::format_spectrum_csv(s));
      emit(spec_peaks, io::format_peaks_json(pl), out);
    } else if (*est) {
      est_opts.strategy = parse_strategy(est_strategy);
      est_opts.refine = !est_no_refine;
      std::unique_ptr<TraceProvider> source;
      if (!est_traces.empty()) {
        if (!est_chain.h.empty() || !est_chain.J.empty() || !est_chain.params_file.empty()) {
          throw Error(ErrorKind::InvalidInput, "--traces replaces the synthetic ground truth; drop --h/--J/--params");
        }
        source = std::make_unique<io::DirectoryProvider>(est_traces);
      } else {
        source = std::make_unique<SyntheticProvider>(chain_from(est_chain), est_noise, resolve_seed(est_seed));
      }
      RecordingProvider rec(*source);
      const EstimateResult r = run_pipeline(rec, est_opts);
      if (!est_dump.empty()) io::dump_traces(est_dump, rec.records());
      emit(est_out, io::format_result_json(r), out);
    } else if (*fig) {
      const ChainParams p = chain_from(fig_chain);
      Table t;
      if (fig_id == "sign_traces") {
        t = sign_traces(p.with_h1(fig_sign_h1), fig_tmax, fig_dt);
      } else if (fig_id == "amplitudes_vs_h1") {
        t = amplitudes_vs_h1(p, field_grid(fig_h1_step, fig_h1_max, fig_h1_step));
      } else {
        const auto grid = field_grid(0.0, fig_h1_max, fig_h1_step);
        t = fig_id == "peaks_vs_h1" ? peaks_vs_h1(p, grid) : eigenenergies(p, grid);
      }
      emit(fig_out, io::format_table_csv(t), out);
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace spinprobe::cli
