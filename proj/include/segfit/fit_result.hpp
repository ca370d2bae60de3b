// Shared optimizer output: best solution, convergence trace, cost ledger.

#ifndef SEGFIT_FIT_RESULT_HPP
#define SEGFIT_FIT_RESULT_HPP

#include "segfit/model.hpp"
#include "segfit/neural.hpp"
#include "segfit/objective.hpp"

#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segfit {

struct TraceRow {
  std::int64_t iteration = 0;
  double greedy_score = 0.0;  // score evaluated at this iteration
  double best_score = 0.0;    // best so far
  std::int64_t f_evals_cum = 0;
  double t_hyp_s = 0.0;
  double t_ver_s = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Per-episode record of the exploratory pass, kept for reward auditing.
struct EpisodeRecord {
  std::vector<Params> thetas;
  std::vector<double> rewards;
  double final_f = 0.0;
};

struct FitResult {
  Solution best_solution;
  double best_score = 0.0;
  std::vector<TraceRow> trace;
  CostLedger ledger;
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;  // DRL only
  std::optional<Mlp> actor, critic;     // DRL only, final online networks
};

inline constexpr const char* kTraceHeader =
    "iteration,greedy_score,best_score,f_evals_cum,t_hyp_s,t_ver_s";

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << kTraceHeader << '\n' << std::setprecision(17);
  for (const auto& r : trace)
    out << r.iteration << ',' << r.greedy_score << ',' << r.best_score << ',' << r.f_evals_cum
        << ',' << r.t_hyp_s << ',' << r.t_ver_s << '\n';
}

inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw std::runtime_error("trace CSV: unexpected header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    TraceRow r;
    char c1, c2, c3, c4, c5;
    if (!(ss >> r.iteration >> c1 >> r.greedy_score >> c2 >> r.best_score >> c3 >> r.f_evals_cum >>
          c4 >> r.t_hyp_s >> c5 >> r.t_ver_s) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',')
      throw std::runtime_error("trace CSV: malformed row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace segfit

#endif  // SEGFIT_FIT_RESULT_HPP
