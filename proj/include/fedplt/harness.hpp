#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedplt/engine.hpp"

namespace fedplt {

/// Simulated time units: t_grad per local gradient epoch, t_comm per
/// agent-round of communication.
struct CostModel {
  double t_grad = 1.0;
  double t_comm = 0.0;
};

/// (epochs * t_grad + t_comm) * active_count.
double cost_per_round(int epochs, std::size_t active_count,
                      const CostModel& cm);

/// Cumulative cost at the first record whose metric is at or below the
/// threshold; nullopt when the trajectory never crosses.  The initial record
/// has zero cost, so an already-converged start reports 0.
std::optional<double> time_to_threshold(const std::vector<RoundRecord>& records,
                                        double threshold);

/// Mean metric over the trailing tail_fraction of executed rounds (at least
/// one record).
double asymptotic_error(const std::vector<RoundRecord>& records,
                        double tail_fraction = 0.1);

struct MonteCarloStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n_seeds = 0;
  int n_reached = 0;
  bool all_reached = false;
};

/// Evaluates `eval` on seeds master_seed + 0 .. master_seed + n_seeds - 1 and
/// aggregates the per-seed scalars (nullopt marks "not reached" and is
/// excluded from mean/min/max).  Honors the FEDPLT_WORKERS environment
/// variable for parallel evaluation; aggregation order is fixed by seed
/// index, so results never depend on scheduling.
MonteCarloStats monte_carlo(
    const std::function<std::optional<double>(std::uint64_t)>& eval,
    int n_seeds, std::uint64_t master_seed);

enum class SweepAxis { Epochs, Rho, TauSq, ParticipationFraction, CommCost };
enum class OutcomeKind { TimeToThreshold, AsymptoticError };

struct SweepSpec {
  SweepAxis axis = SweepAxis::Epochs;
  std::vector<double> values;
  int seeds = 20;
  OutcomeKind outcome = OutcomeKind::TimeToThreshold;
  double threshold = 1e-5;
  double tail_fraction = 0.1;
  std::uint64_t master_seed = 1;
};

struct TableRow {
  std::string config;
  double axis_value = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int n_seeds = 0;
  bool reached = true;
};

/// One aggregated row per axis value; every other parameter stays at `base`
/// (the Rho axis re-derives automatic steps, since gamma == 0 resolves
/// against the active rho).  Runs are seeded deterministically from
/// spec.master_seed.
std::vector<TableRow> sweep(const ObjectiveList& objectives,
                            const NonsmoothSpec& h, const RunConfig& base,
                            const SweepSpec& spec);

enum class TableFormat { Csv, Json };

/// Rendered table with numbers at 6 significant digits; "not reached" rows
/// carry a sentinel in place of their statistics.  emit -> parse -> emit is
/// byte-stable for both formats.
std::string emit_table(const std::vector<TableRow>& rows, TableFormat format);
std::vector<TableRow> parse_table(const std::string& text, TableFormat format);

}  // namespace fedplt
