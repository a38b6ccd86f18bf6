#include "spinprobe/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "spinprobe/error.hpp"

namespace spinprobe::io {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what);
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, source + ": " + e.what());
  }
}

double number_at(const json& arr, std::size_t i, const std::string& source, const char* field) {
  if (!arr.is_array() || i >= arr.size() || !arr[i].is_number()) {
    throw Error(ErrorKind::Parse, source + ": \"" + field + "\" needs a numeric entry " + std::to_string(i));
  }
  return arr[i].get<double>();
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string() + ": " + std::strerror(errno));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string() + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_trace_csv(const TimeTrace& t) {
  std::string out = "t,sx\n";
  out.reserve(out.size() + t.samples.size() * 48);
  for (std::size_t k = 0; k < t.samples.size(); ++k) {
    out += fmt(t.time(k));
    out += ',';
    out += fmt(t.samples[k]);
    out += '\n';
  }
  return out;
}

TimeTrace parse_trace_csv(std::string_view text, const std::string& source) {
  std::vector<double> ts, xs;
  std::size_t line_no = 0;
  bool header = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header) {
      if (line != "t,sx") parse_fail(source, line_no, "expected header \"t,sx\"");
      header = true;
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      parse_fail(source, line_no, "expected two comma-separated fields");
    }
    double t = 0.0, x = 0.0;
    if (!parse_double(line.substr(0, comma), t)) parse_fail(source, line_no, "bad time value");
    if (!parse_double(line.substr(comma + 1), x)) parse_fail(source, line_no, "bad sample value");
    ts.push_back(t);
    xs.push_back(x);
  }
  if (!header) parse_fail(source, line_no, "empty file, expected header \"t,sx\"");
  if (ts.size() < 2) parse_fail(source, line_no, "need at least two samples");

  TimeTrace tr;
  tr.t0 = ts.front();
  tr.dt = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
  if (!(tr.dt > 0.0)) parse_fail(source, 3, "time column must increase");
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (std::abs(ts[k] - tr.time(k)) > 1e-6 * tr.dt) {
      // header is line 1; blank lines are not expected inside the data
      parse_fail(source, k + 2, "time grid is not uniform");
    }
  }
  tr.samples = std::move(xs);
  return tr;
}

void write_trace_csv(const fs::path& path, const TimeTrace& t) { write_file_atomic(path, format_trace_csv(t)); }

TimeTrace read_trace_csv(const fs::path& path) { return parse_trace_csv(read_file(path), path.string()); }

std::string format_params_json(const ChainParams& p) {
  json j;
  j["h"] = {p.h1, p.h2, p.h3};
  j["J"] = {p.J1, p.J2};
  if (p.alpha2 != 0.0 || p.alpha3 != 0.0) j["alpha"] = {p.alpha2, p.alpha3};
  return j.dump(2) + "\n";
}

ChainParams parse_params_json(std::string_view text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object() || !j.contains("h") || !j.contains("J")) {
    throw Error(ErrorKind::Parse, source + ": expected {\"h\":[h1,h2,h3],\"J\":[J1,J2]}");
  }
  if (j["h"].size() != 3 || j["J"].size() != 2) {
    throw Error(ErrorKind::Parse, source + ": \"h\" needs 3 entries and \"J\" needs 2");
  }
  ChainParams p;
  p.h1 = number_at(j["h"], 0, source, "h");
  p.h2 = number_at(j["h"], 1, source, "h");
  p.h3 = number_at(j["h"], 2, source, "h");
  p.J1 = number_at(j["J"], 0, source, "J");
  p.J2 = number_at(j["J"], 1, source, "J");
  if (j.contains("alpha")) {
    p.alpha2 = number_at(j["alpha"], 0, source, "alpha");
    p.alpha3 = number_at(j["alpha"], 1, source, "alpha");
  }
  return p;
}

ChainParams read_params_json(const fs::path& path) { return parse_params_json(read_file(path), path.string()); }

std::string format_spectrum_csv(const Spectrum& s) {
  std::string out = "omega,magnitude\n";
  for (std::size_t k = 0; k < s.omegas.size(); ++k) out += fmt(s.omegas[k]) + "," + fmt(s.magnitudes[k]) + "\n";
  return out;
}

std::string format_peaks_json(const PeakList& pl) {
  json j;
  j["duration"] = pl.duration;
  j["resolution"] = pl.resolution;
  j["window"] = to_string(pl.window);
  j["zero_pad"] = pl.zero_pad;
  j["peaks"] = json::array();
  for (const auto& p : pl.peaks) j["peaks"].push_back({{"omega", p.omega}, {"magnitude", p.magnitude}, {"quality", p.quality}});
  return j.dump(2) + "\n";
}

std::string format_result_json(const EstimateResult& r) {
  json j;
  j["version"] = kVersion;
  j["h2"] = r.h2;
  j["h3"] = r.h3;
  j["absJ1"] = r.absJ1;
  j["absJ2"] = r.absJ2;
  j["signJ1"] = r.signJ1;
  j["signJ2"] = r.signJ2;
  j["J1"] = r.signJ1 * r.absJ1;
  j["J2"] = r.signJ2 * r.absJ2;
  j["residual_rms"] = r.residual_rms;
  j["residual_max"] = r.residual_max;

  const Diagnostics& d = r.diagnostics;
  json diag = json::object();
  if (d.asymptotic) {
    const auto& a = *d.asymptotic;
    diag["asymptotic"] = {{"P", a.P},
                          {"M", a.M},
                          {"h1_used", a.h1_used},
                          {"convergence_residual", a.convergence_residual},
                          {"extrapolation", a.extrapolation},
                          {"crosscheck", a.crosscheck},
                          {"route", to_string(a.route)},
                          {"degenerate", a.degenerate},
                          {"h1_values", a.h1_values},
                          {"P_values", a.P_values},
                          {"M_values", a.M_values}};
  }
  if (d.zero_field) {
    const auto& z = *d.zero_field;
    diag["zero_field"] = {{"omega_plus", z.omega_plus}, {"omega_minus", z.omega_minus}, {"S0", z.S0}, {"C0", z.C0}};
  }
  if (d.signs) {
    const auto& s = *d.signs;
    diag["signs"] = {{"signJ1", s.signJ1},         {"signJ2", s.signJ2},
                     {"window_end", s.window_end}, {"early_statistic", s.early_statistic},
                     {"early_z", s.early_z},       {"rms_plus", s.rms_plus},
                     {"rms_minus", s.rms_minus},   {"margin", s.margin},
                     {"threshold", s.threshold},   {"noise_estimate", s.noise_estimate}};
  }
  if (d.refine) {
    const auto& f = *d.refine;
    diag["refine"] = {{"improved", f.improved},     {"iterations", f.iterations},
                      {"residual_count", f.residual_count}, {"rms_before", f.rms_before},
                      {"rms_after", f.rms_after},   {"note", f.note}};
  }
  diag["notes"] = d.notes;
  j["diagnostics"] = diag;
  return j.dump(2) + "\n";
}

std::string format_table_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + fmt(row[c]);
    out += '\n';
  }
  return out;
}

DirectoryProvider::DirectoryProvider(fs::path dir) : dir_(std::move(dir)) {
  const fs::path manifest = dir_ / "manifest.json";
  const json j = parse_json(read_file(manifest), manifest.string());
  if (!j.is_object() || !j.contains("traces") || !j["traces"].is_array()) {
    throw Error(ErrorKind::Parse, manifest.string() + ": expected {\"traces\":[...]}");
  }
  for (const auto& e : j["traces"]) {
    if (!e.is_object() || !e.contains("file") || !e.contains("h1") || !e.contains("init") ||
        !e["file"].is_string() || !e["h1"].is_number() || !e["init"].is_string()) {
      throw Error(ErrorKind::Parse, manifest.string() + ": each trace needs \"file\", \"h1\" and \"init\"");
    }
    Entry en{e["file"].get<std::string>(), e["h1"].get<double>(), e["init"].get<std::string>(), ""};
    if (e.contains("stage")) en.stage = e["stage"].get<std::string>();
    entries_.push_back(std::move(en));
  }
}

TimeTrace DirectoryProvider::acquire(const TraceRequest& request) {
  const Entry* hit = nullptr;
  for (const auto& e : entries_) {
    if (e.init != request.init) continue;
    if (std::abs(e.h1 - request.h1) > 1e-9 * std::max(1.0, std::abs(request.h1))) continue;
    if (!e.stage.empty() && e.stage != request.stage) continue;
    // an entry tagged with this stage wins over an untagged one
    if (!hit || (!e.stage.empty() && hit->stage.empty())) hit = &e;
  }
  if (!hit) {
    throw Error(ErrorKind::InvalidInput, "no trace in " + dir_.string() + " for stage " + request.stage +
                                             ", h1 = " + fmt(request.h1) + ", init " + request.init);
  }
  return read_trace_csv(dir_ / hit->file);
}

void dump_traces(const fs::path& dir, const std::vector<std::pair<TraceRequest, TimeTrace>>& records) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  json manifest;
  manifest["traces"] = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
    write_trace_csv(dir / name, records[i].second);
    manifest["traces"].push_back(
        {{"file", name}, {"h1", records[i].first.h1}, {"init", records[i].first.init}, {"stage", records[i].first.stage}});
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace spinprobe::io
