#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spinprobe/estimate.hpp"
#include "spinprobe/figures.hpp"
#include "spinprobe/pipeline.hpp"

namespace spinprobe::io {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

// Whole-file write through a temporary in the same directory and a rename.
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

// Trace CSV: header "t,sx", one sample per line, %.17g. Parsing needs a
// uniform grid; errors name the offending line.
std::string format_trace_csv(const TimeTrace& t);
TimeTrace parse_trace_csv(std::string_view text, const std::string& source = "<input>");
void write_trace_csv(const fs::path& path, const TimeTrace& t);
TimeTrace read_trace_csv(const fs::path& path);

// {"h":[h1,h2,h3],"J":[J1,J2]}, optionally "alpha":[a2,a3].
std::string format_params_json(const ChainParams& p);
ChainParams parse_params_json(std::string_view text, const std::string& source = "<input>");
ChainParams read_params_json(const fs::path& path);

// "omega,magnitude" per bin.
std::string format_spectrum_csv(const Spectrum& s);
std::string format_peaks_json(const PeakList& pl);

std::string format_result_json(const EstimateResult& r);

std::string format_table_csv(const Table& t);

// Traces listed in manifest.json inside `dir`:
//   {"traces":[{"file":"a.csv","h1":0,"init":"+uu","stage":"zero-field"}, ...]}
// "stage" is optional; an entry with a stage only answers that stage. The
// measured grid is used as is, whatever duration and step were asked for.
class DirectoryProvider : public TraceProvider {
 public:
  explicit DirectoryProvider(fs::path dir);
  TimeTrace acquire(const TraceRequest& request) override;

 private:
  struct Entry {
    fs::path file;
    double h1 = 0.0;
    std::string init;
    std::string stage;
  };
  fs::path dir_;
  std::vector<Entry> entries_;
};

// Writes every recorded acquisition as trace_NNN.csv plus a manifest that
// DirectoryProvider reads back.
void dump_traces(const fs::path& dir, const std::vector<std::pair<TraceRequest, TimeTrace>>& records);

}  // namespace spinprobe::io
