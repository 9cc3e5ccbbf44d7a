#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedplt/common.hpp"
#include "fedplt/local_solvers.hpp"
#include "fedplt/objective.hpp"
#include "fedplt/operators.hpp"
#include "fedplt/problem.hpp"

namespace fedplt {

struct AgentState {
  Vector x;
  Vector z;
};

enum class ParticipationKind { Full, Bernoulli, UniformSubset };

/// Who is active each round.  Bernoulli draws every agent independently with
/// probability p (or per_agent[i] when given); UniformSubset draws exactly
/// subset_size distinct agents uniformly.  UniformSubset sits outside the
/// stochastic rate analysis (activations are not independent across agents),
/// which run metadata records.
struct Participation {
  ParticipationKind kind = ParticipationKind::Full;
  double p = 1.0;
  std::vector<double> per_agent;  // optional per-agent Bernoulli probabilities
  int subset_size = 0;

  double min_probability(std::size_t num_agents) const;
  double max_probability(std::size_t num_agents) const;
};

enum class MetricKind {
  GradNormSq,        // || sum_i grad f_i(mean x) ||^2
  ConsensusDistance, // || mean x - x_star ||
  StackedDistance    // sqrt(sum_i ||x_i - x_star||^2 + ||z_i - z_star_i||^2)
};

/// Snapshot after k rounds.  Record 0 is the initial state (zero cost, empty
/// active set); record k >= 1 carries the coordinator output, the active set,
/// and the cumulative simulated cost of rounds 1..k.
struct RoundRecord {
  int k = 0;
  std::vector<std::uint32_t> active;
  Vector y;
  double metric = 0.0;
  double cost = 0.0;
};

struct RunConfig {
  LocalSolveConfig solve;
  Participation participation;
  int rounds = 100;
  std::uint64_t seed = 0;
  std::optional<MetricKind> metric;      // default: by nonsmooth kind
  std::optional<PrsSolution> reference;  // required by distance metrics
  double t_grad = 0.0;  // per-epoch gradient cost weight
  double t_comm = 0.0;  // per-round communication cost weight
  bool dp_init = true;  // Gaussian start for noisy runs (privacy analysis)
};

struct RunResult {
  std::vector<RoundRecord> records;
  std::vector<AgentState> agents;
  Vector x_bar;                  // mean of final agent x
  MetricKind metric = MetricKind::GradNormSq;
  bool outside_rate_model = false;  // UniformSubset participation
};

/// Coordinator half of a round: y = prox of the averaged splitting states.
Vector coordinator_step(const std::vector<AgentState>& agents,
                        const NonsmoothSpec& h, double rho);

/// Agent half of a round: from the broadcast y, solve the local proximal
/// objective starting at the current x (v = 2y - z) and fold the result back
/// into the splitting state (z += 2(x' - y)).
AgentState agent_round(const LocalObjective& obj, const AgentState& state,
                       const Vector& y, const LocalSolveConfig& cfg,
                       std::mt19937_64& rng);

/// Active-set draw for one round; returns sorted agent ids.
std::vector<std::uint32_t> sample_active_set(const Participation& pm,
                                             std::size_t num_agents,
                                             std::mt19937_64& rng);

/// One full round over `agents` in place: coordinator step from all stored z,
/// then local rounds for the sampled active set (inactive agents keep their
/// state bit-identical).  Returns the record for round k.
RoundRecord fedplt_round(const ObjectiveList& objectives,
                         const NonsmoothSpec& h, const RunConfig& cfg, int k,
                         std::vector<AgentState>& agents, double prev_cost);

/// K rounds of the algorithm from x = z = 0 (noisy runs draw the Gaussian
/// private start instead, unless cfg.dp_init is cleared).  Deterministic in
/// cfg.seed: the same seed yields a bit-identical record sequence.
RunResult run(const ObjectiveList& objectives, const NonsmoothSpec& h,
              RunConfig cfg);

/// Convenience front end resolving objectives, bounds, and the default
/// metric from a problem instance.
RunResult run(const ProblemInstance& p, RunConfig cfg);

/// Ne local GD epochs on f_i alone from the broadcast average, then a plain
/// average of the local results — the client-drift baseline.  Records use
/// the gradient-norm metric and the same cost model as run().
RunResult fedavg_baseline(const ObjectiveList& objectives, RunConfig cfg);

/// Sample-mean estimate of the per-round additive solver error nu: for each
/// of `rounds` rounds, the active agents' solver outputs are compared with
/// the exact proximal map, stacked as (e, 2e), and the norms averaged.
double estimate_additive_error(const ObjectiveList& objectives,
                               const NonsmoothSpec& h, RunConfig cfg,
                               int rounds);

/// Line-delimited trajectory log: one JSON object per record with keys
/// k, active, metric, cost.
std::string trajectory_jsonl(const std::vector<RoundRecord>& records);

}  // namespace fedplt
