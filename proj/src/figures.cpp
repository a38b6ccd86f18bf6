#include "spinprobe/figures.hpp"

#include <cmath>
#include <exception>

#include "spinprobe/dynamics.hpp"
#include "spinprobe/error.hpp"
#include "spinprobe/spectral.hpp"

namespace spinprobe {

namespace {

// Rows are independent; the first failure is rethrown after the loop.
template <class F>
Table tabulate(std::vector<std::string> columns, const std::vector<double>& xs, F row) {
  Table t{std::move(columns), std::vector<std::vector<double>>(xs.size())};
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < xs.size(); ++i) {
    try {
      t.rows[i] = row(xs[i]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return t;
}

void check(const ChainParams& p, const std::vector<double>& h1) {
  if (!p.finite()) throw Error(ErrorKind::InvalidInput, "parameters must be finite");
  if (h1.empty()) throw Error(ErrorKind::InvalidInput, "empty h1 grid");
}

}  // namespace

std::vector<double> field_grid(double from, double to, double step) {
  if (!(step > 0.0) || !(to >= from) || !std::isfinite(from) || !std::isfinite(to)) {
    throw Error(ErrorKind::InvalidInput, "h1 grid needs from <= to and step > 0");
  }
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(from + step * static_cast<double>(i));
  return out;
}

Table peaks_vs_h1(const ChainParams& p, const std::vector<double>& h1) {
  check(p, h1);
  return tabulate({"h1", "e1+e2", "e1+e3", "e2+e4", "e3+e4", "e1-e4", "e2-e3"}, h1, [&](double h) {
    const EigenSystem es = diagonalize(p.with_h1(h), Labeling::ClosedForm);
    const auto& e = es.eps;
    return std::vector<double>{h,
                               std::abs(e[0] + e[1]),
                               std::abs(e[0] + e[2]),
                               std::abs(e[1] + e[3]),
                               std::abs(e[2] + e[3]),
                               std::abs(e[0] - e[3]),
                               std::abs(e[1] - e[2])};
  });
}

Table amplitudes_vs_h1(const ChainParams& p, const std::vector<double>& h1) {
  check(p, h1);
  for (double h : h1) {
    if (h == 0.0) throw Error(ErrorKind::InvalidInput, "amplitudes are not defined at h1 = 0 (degenerate spectrum)");
  }
  return tabulate({"h1", "C", "A21", "A31", "A42", "A43", "B41", "B32"}, h1, [&](double h) {
    const PairAmplitudes a = pair_amplitudes(diagonalize(p.with_h1(h), Labeling::ClosedForm), all_up());
    return std::vector<double>{h, a.C, a.A[2][1], a.A[3][1], a.A[4][2], a.A[4][3], a.B[4][1], a.B[3][2]};
  });
}

Table sign_traces(const ChainParams& p, double t_max, double dt) {
  if (!p.finite()) throw Error(ErrorKind::InvalidInput, "parameters must be finite");
  if (!(dt > 0.0) || !(t_max > 0.0)) throw Error(ErrorKind::InvalidInput, "need t_max > 0 and dt > 0");
  TimeGrid g;
  g.dt = dt;
  g.count = static_cast<std::size_t>(std::floor(t_max / dt + 0.5)) + 1;
  const double j1 = std::abs(p.J1), j2 = std::abs(p.J2);
  const int signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  std::vector<TimeTrace> traces;
  for (const auto& s : signs) {
    ChainParams q = p;
    q.J1 = s[0] * j1;
    q.J2 = s[1] * j2;
    traces.push_back(trace_sx1(q, all_up(), g));
  }
  Table t{{"t", "++", "+-", "-+", "--"}, {}};
  for (std::size_t k = 0; k < g.count; ++k) {
    t.rows.push_back({traces[0].time(k), traces[0].samples[k], traces[1].samples[k], traces[2].samples[k],
                      traces[3].samples[k]});
  }
  return t;
}

Table eigenenergies(const ChainParams& p, const std::vector<double>& h1) {
  check(p, h1);
  return tabulate({"h1", "e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8"}, h1, [&](double h) {
    const EigenSystem es = diagonalize(build_hamiltonian(p.with_h1(h)));
    std::vector<double> row{h};
    row.insert(row.end(), es.eps.begin(), es.eps.end());
    return row;
  });
}

}  // namespace spinprobe
