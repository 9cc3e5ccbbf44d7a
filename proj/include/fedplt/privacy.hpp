#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedplt/common.hpp"
#include "fedplt/problem.hpp"

namespace fedplt {

/// Inputs of the Renyi-DP accountant for noisy-GD runs.  clip_bound is the
/// gradient-sensitivity constant L (per-sample gradients are clipped to L/2,
/// so one-sample dataset swaps move a local gradient by at most L/q_i).
struct PrivacyParams {
  double clip_bound = 1.0;   // L > 0
  double tau_sq = 1.0;       // per-coordinate noise variance scale, > 0
  double gamma = 0.1;        // inner step size, > 0
  double lambda_order = 2.0; // Renyi order, > 1
  int rounds = 1;            // K >= 0
  int epochs = 1;            // Ne >= 1
};

/// Scale g to norm at most L/2: g * min{1, L / (2||g||)}.
Vector clip_gradient(const Vector& g, double clip_bound);

/// Renyi divergence bound for one agent after K rounds of Ne noisy steps:
///   eps_i <= lambda L^2 / (lambda_lo tau^2 q_i^2) *
///            (1 - exp(-lambda_lo gamma K Ne / 2)).
double rdp_epsilon_agent(const PrivacyParams& pp, double lambda_lo,
                         std::size_t q_i);

/// Worst agent bound: the formula evaluated at min_i q_i.
double rdp_epsilon_worst(const PrivacyParams& pp, double lambda_lo,
                         const std::vector<std::size_t>& q);

/// K -> infinity ceiling of the agent bound: lambda L^2 / (lambda_lo tau^2
/// q_i^2).  Every finite-K epsilon stays below this.
double rdp_epsilon_limit(const PrivacyParams& pp, double lambda_lo,
                         std::size_t q_i);

/// Renyi-to-approximate conversion: (lambda, eps)-RDP implies
/// (eps + log(1/delta) / (lambda - 1), delta)-ADP for delta in (0,1).
double rdp_to_adp(double eps_rdp, double lambda_order, double delta);

/// Gaussian start x_{i,0} ~ N(0, 2 tau^2 / lambda_lo * I_n) required by the
/// privacy analysis; tau_sq == 0 degenerates to the zero vector.
Vector private_init(int dim, double tau_sq, double lambda_lo,
                    std::mt19937_64& rng);

/// Accuracy bound for noisy runs after `rounds` rounds:
///   s_norm^K * initial_dist
///     + (1 - s_norm^K) / (1 - s_norm) * tau sqrt(10 n N gamma)
///       * (1 - chi^Ne) / (1 - chi).
/// value is the bound; contractive reports s_norm < 1 (otherwise the value is
/// a partial sum with no asymptote).
struct PrivacyAccuracyBound {
  double value = 0.0;
  bool contractive = false;
};

PrivacyAccuracyBound privacy_accuracy_bound(double s_norm, double chi,
                                            int epochs, double tau_sq, int dim,
                                            int num_agents, double gamma,
                                            int rounds, double initial_dist);

/// K -> infinity limit of the bound's noise term; requires s_norm < 1.
double privacy_accuracy_asymptote(double s_norm, double chi, int epochs,
                                  double tau_sq, int dim, int num_agents,
                                  double gamma);

/// Randomized falsifier of the gradient-sensitivity assumption
/// ||grad f^D(x) - grad f^D'(x)|| <= L / q over one-sample swaps of `d`.
/// Trials draw random models and replacement points (plus a deterministic
/// mirror probe at the largest-norm sample); `clipped` applies the L-clipping
/// rule before averaging.  Returns the first counterexample found, if any.
struct SensitivityOutcome {
  bool holds = true;
  double worst_gap = 0.0;     // max ||grad diff|| - L/q over trials
  std::size_t worst_index = 0;  // swapped sample of the worst trial
};

SensitivityOutcome sensitivity_check(const LocalDataset& d,
                                     const RegularizerSpec& r,
                                     double clip_bound, int trials,
                                     std::uint64_t seed, bool clipped);

/// Per-agent accounting rows plus worst-case summary.
struct AgentPrivacyRow {
  std::uint32_t agent_id = 0;
  std::size_t samples = 0;
  double eps_rdp = 0.0;
  double eps_rdp_limit = 0.0;   // K -> infinity ceiling for this agent
  std::vector<double> eps_adp;  // aligned with PrivacyReport::deltas
};

struct PrivacyReport {
  PrivacyParams params;
  double lambda_lo = 0.0;
  std::vector<double> deltas;
  std::vector<AgentPrivacyRow> rows;
  double eps_rdp_worst = 0.0;
  std::vector<double> eps_adp_worst;
};

inline const std::vector<double>& default_adp_deltas() {
  static const std::vector<double> d{1e-3, 1e-5, 1e-7};
  return d;
}

PrivacyReport build_privacy_report(const PrivacyParams& pp, double lambda_lo,
                                   const std::vector<std::size_t>& q,
                                   const std::vector<double>& deltas);

std::string privacy_report_csv(const PrivacyReport& report);
std::string privacy_report_json(const PrivacyReport& report);

}  // namespace fedplt
