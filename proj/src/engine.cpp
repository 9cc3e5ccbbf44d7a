#include "fedplt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedplt/privacy.hpp"

namespace fedplt {
namespace {

void check_participation(const Participation& pm, std::size_t num_agents) {
  switch (pm.kind) {
    case ParticipationKind::Full:
      return;
    case ParticipationKind::Bernoulli:
      if (!pm.per_agent.empty()) {
        require(pm.per_agent.size() == num_agents,
                "participation: per-agent probability count mismatch");
        for (double p : pm.per_agent) {
          require(p > 0.0 && p <= 1.0,
                  "participation: probabilities must lie in (0,1]");
        }
      } else {
        require(pm.p > 0.0 && pm.p <= 1.0,
                "participation: probability must lie in (0,1]");
      }
      return;
    case ParticipationKind::UniformSubset:
      require(pm.subset_size >= 1 &&
                  static_cast<std::size_t>(pm.subset_size) <= num_agents,
              "participation: subset size must lie in [1, N]");
      return;
  }
  throw std::invalid_argument("participation: unknown kind");
}

MetricKind default_metric(const NonsmoothSpec& h) {
  return h.kind == NonsmoothKind::Zero ? MetricKind::GradNormSq
                                       : MetricKind::ConsensusDistance;
}

double evaluate_metric(MetricKind kind, const ObjectiveList& objectives,
                       const std::vector<AgentState>& agents,
                       const std::optional<PrsSolution>& reference) {
  const Eigen::Index n = agents.front().x.size();
  Vector x_bar = Vector::Zero(n);
  for (const auto& a : agents) x_bar += a.x;
  x_bar /= static_cast<double>(agents.size());
  switch (kind) {
    case MetricKind::GradNormSq:
      return global_gradient_norm_sq(x_bar, objectives);
    case MetricKind::ConsensusDistance:
      require(reference.has_value(),
              "metric: consensus distance needs a reference solution");
      return (x_bar - reference->x_star).norm();
    case MetricKind::StackedDistance: {
      require(reference.has_value() &&
                  reference->z_star.size() == agents.size(),
              "metric: stacked distance needs a matching reference");
      double acc = 0.0;
      for (std::size_t i = 0; i < agents.size(); ++i) {
        acc += (agents[i].x - reference->x_star).squaredNorm();
        acc += (agents[i].z - reference->z_star[i]).squaredNorm();
      }
      return std::sqrt(acc);
    }
  }
  throw std::invalid_argument("metric: unknown kind");
}

std::vector<Vector> collect_z(const std::vector<AgentState>& agents) {
  std::vector<Vector> z;
  z.reserve(agents.size());
  for (const auto& a : agents) z.push_back(a.z);
  return z;
}

}  // namespace

double Participation::min_probability(std::size_t num_agents) const {
  switch (kind) {
    case ParticipationKind::Full:
      return 1.0;
    case ParticipationKind::Bernoulli:
      if (!per_agent.empty()) {
        return *std::min_element(per_agent.begin(), per_agent.end());
      }
      return p;
    case ParticipationKind::UniformSubset:
      return static_cast<double>(subset_size) /
             static_cast<double>(num_agents);
  }
  throw std::invalid_argument("participation: unknown kind");
}

double Participation::max_probability(std::size_t num_agents) const {
  switch (kind) {
    case ParticipationKind::Full:
      return 1.0;
    case ParticipationKind::Bernoulli:
      if (!per_agent.empty()) {
        return *std::max_element(per_agent.begin(), per_agent.end());
      }
      return p;
    case ParticipationKind::UniformSubset:
      return static_cast<double>(subset_size) /
             static_cast<double>(num_agents);
  }
  throw std::invalid_argument("participation: unknown kind");
}

Vector coordinator_step(const std::vector<AgentState>& agents,
                        const NonsmoothSpec& h, double rho) {
  return consensus_prox(collect_z(agents), h, rho);
}

AgentState agent_round(const LocalObjective& obj, const AgentState& state,
                       const Vector& y, const LocalSolveConfig& cfg,
                       std::mt19937_64& rng) {
  require(state.x.size() == obj.dim() && state.z.size() == obj.dim() &&
              y.size() == obj.dim(),
          "agent round: dimension mismatch");
  Vector v = 2.0 * y - state.z;
  AgentState next;
  next.x = run_local_solver(obj, state.x, v, cfg, rng);
  next.z = state.z + 2.0 * (next.x - y);
  return next;
}

std::vector<std::uint32_t> sample_active_set(const Participation& pm,
                                             std::size_t num_agents,
                                             std::mt19937_64& rng) {
  check_participation(pm, num_agents);
  std::vector<std::uint32_t> active;
  switch (pm.kind) {
    case ParticipationKind::Full:
      active.resize(num_agents);
      for (std::size_t i = 0; i < num_agents; ++i) {
        active[i] = static_cast<std::uint32_t>(i);
      }
      return active;
    case ParticipationKind::Bernoulli: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (std::size_t i = 0; i < num_agents; ++i) {
        const double p = pm.per_agent.empty() ? pm.p : pm.per_agent[i];
        if (unif(rng) < p) active.push_back(static_cast<std::uint32_t>(i));
      }
      return active;
    }
    case ParticipationKind::UniformSubset: {
      std::vector<std::uint32_t> ids(num_agents);
      for (std::size_t i = 0; i < num_agents; ++i) {
        ids[i] = static_cast<std::uint32_t>(i);
      }
      for (int j = 0; j < pm.subset_size; ++j) {
        std::uniform_int_distribution<std::size_t> pick(
            static_cast<std::size_t>(j), num_agents - 1);
        std::swap(ids[static_cast<std::size_t>(j)], ids[pick(rng)]);
      }
      active.assign(ids.begin(), ids.begin() + pm.subset_size);
      std::sort(active.begin(), active.end());
      return active;
    }
  }
  throw std::invalid_argument("participation: unknown kind");
}

RoundRecord fedplt_round(const ObjectiveList& objectives,
                         const NonsmoothSpec& h, const RunConfig& cfg, int k,
                         std::vector<AgentState>& agents, double prev_cost) {
  RoundRecord rec;
  rec.k = k;
  rec.y = consensus_prox(collect_z(agents), h, cfg.solve.rho);

  auto part_rng = make_rng(cfg.seed, {kStreamParticipation,
                                      static_cast<std::uint32_t>(k)});
  rec.active = sample_active_set(cfg.participation, agents.size(), part_rng);

  for (std::uint32_t i : rec.active) {
    auto rng = make_rng(cfg.seed,
                        {kStreamSolver, i, static_cast<std::uint32_t>(k)});
    try {
      agents[i] =
          agent_round(*objectives[i], agents[i], rec.y, cfg.solve, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("round " + std::to_string(k) + ", agent " +
                           std::to_string(i) + ": " + e.what());
    }
  }
  rec.cost = prev_cost +
             (static_cast<double>(cfg.solve.epochs) * cfg.t_grad + cfg.t_comm) *
                 static_cast<double>(rec.active.size());
  const MetricKind metric = cfg.metric.value_or(default_metric(h));
  rec.metric = evaluate_metric(metric, objectives, agents, cfg.reference);
  require_finite(rec.metric, "round " + std::to_string(k) +
                                 ": metric left the finite range");
  return rec;
}

RunResult run(const ObjectiveList& objectives, const NonsmoothSpec& h,
              RunConfig cfg) {
  require(!objectives.empty(), "run: no objectives");
  require(cfg.rounds >= 0, "run: round count must be >= 0");
  check_participation(cfg.participation, objectives.size());
  const int n = objectives.front()->dim();
  for (const auto& obj : objectives) {
    require(obj->dim() == n, "run: mixed objective dimensions");
  }

  const MetricKind metric = cfg.metric.value_or(default_metric(h));
  cfg.metric = metric;

  std::vector<AgentState> agents(objectives.size());
  const bool gaussian_start = cfg.solve.type == SolverType::NoisyGd &&
                              cfg.dp_init && cfg.solve.tau_sq > 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (gaussian_start) {
      require(cfg.solve.bounds.has_value() && cfg.solve.bounds->valid(),
              "run: private initialization needs valid convexity bounds");
      auto rng = make_rng(cfg.seed,
                          {kStreamInit, static_cast<std::uint32_t>(i)});
      agents[i].x = private_init(n, cfg.solve.tau_sq,
                                 cfg.solve.bounds->lambda_lo, rng);
    } else {
      agents[i].x = Vector::Zero(n);
    }
    agents[i].z = Vector::Zero(n);
  }

  RunResult result;
  result.metric = metric;
  result.outside_rate_model =
      cfg.participation.kind == ParticipationKind::UniformSubset;
  result.records.reserve(static_cast<std::size_t>(cfg.rounds) + 1);

  RoundRecord initial;
  initial.k = 0;
  initial.y = consensus_prox(collect_z(agents), h, cfg.solve.rho);
  initial.metric = evaluate_metric(metric, objectives, agents, cfg.reference);
  initial.cost = 0.0;
  result.records.push_back(std::move(initial));

  for (int k = 1; k <= cfg.rounds; ++k) {
    result.records.push_back(fedplt_round(objectives, h, cfg, k, agents,
                                          result.records.back().cost));
  }

  result.x_bar = Vector::Zero(n);
  for (const auto& a : agents) result.x_bar += a.x;
  result.x_bar /= static_cast<double>(agents.size());
  result.agents = std::move(agents);
  return result;
}

RunResult run(const ProblemInstance& p, RunConfig cfg) {
  ObjectiveList objectives = make_objectives(p);
  if (!cfg.solve.bounds && p.bounds.valid()) cfg.solve.bounds = p.bounds;
  return run(objectives, p.nonsmooth, std::move(cfg));
}

RunResult fedavg_baseline(const ObjectiveList& objectives, RunConfig cfg) {
  require(!objectives.empty(), "fedavg: no objectives");
  require(cfg.rounds >= 0, "fedavg: round count must be >= 0");
  require(cfg.solve.epochs >= 1, "fedavg: epochs must be >= 1");
  const double gamma = resolve_step(cfg.solve);
  require(gamma > 0.0, "fedavg: step must be > 0");
  const int n = objectives.front()->dim();

  Vector x_bar = Vector::Zero(n);
  RunResult result;
  result.metric = MetricKind::GradNormSq;
  result.records.reserve(static_cast<std::size_t>(cfg.rounds) + 1);

  std::vector<std::uint32_t> everyone(objectives.size());
  for (std::size_t i = 0; i < everyone.size(); ++i) {
    everyone[i] = static_cast<std::uint32_t>(i);
  }

  RoundRecord rec;
  rec.k = 0;
  rec.y = x_bar;
  rec.metric = global_gradient_norm_sq(x_bar, objectives);
  rec.cost = 0.0;
  result.records.push_back(rec);

  for (int k = 1; k <= cfg.rounds; ++k) {
    Vector next = Vector::Zero(n);
    for (const auto& obj : objectives) {
      Vector w = x_bar;
      for (int l = 0; l < cfg.solve.epochs; ++l) {
        w -= gamma * obj->gradient(w);
        require_finite(w, "fedavg: iterate left the finite range");
      }
      next += w;
    }
    x_bar = next / static_cast<double>(objectives.size());

    RoundRecord r;
    r.k = k;
    r.active = everyone;
    r.y = x_bar;
    r.metric = global_gradient_norm_sq(x_bar, objectives);
    r.cost = result.records.back().cost +
             (static_cast<double>(cfg.solve.epochs) * cfg.t_grad + cfg.t_comm) *
                 static_cast<double>(objectives.size());
    result.records.push_back(std::move(r));
  }

  result.agents.assign(objectives.size(), AgentState{x_bar, Vector::Zero(n)});
  result.x_bar = x_bar;
  return result;
}

double estimate_additive_error(const ObjectiveList& objectives,
                               const NonsmoothSpec& h, RunConfig cfg,
                               int rounds) {
  require(rounds >= 1, "nu estimate: need at least one round");
  require(cfg.solve.bounds.has_value() && cfg.solve.bounds->valid(),
          "nu estimate: valid convexity bounds are required");
  const int n = objectives.front()->dim();
  std::vector<AgentState> agents(objectives.size(),
                                 AgentState{Vector::Zero(n), Vector::Zero(n)});
  double acc = 0.0;
  for (int k = 1; k <= rounds; ++k) {
    const Vector y = consensus_prox(collect_z(agents), h, cfg.solve.rho);
    auto part_rng = make_rng(cfg.seed, {kStreamParticipation,
                                        static_cast<std::uint32_t>(k)});
    const auto active =
        sample_active_set(cfg.participation, agents.size(), part_rng);
    double round_sq = 0.0;
    for (std::uint32_t i : active) {
      auto rng = make_rng(cfg.seed,
                          {kStreamSolver, i, static_cast<std::uint32_t>(k)});
      const AgentState next =
          agent_round(*objectives[i], agents[i], y, cfg.solve, rng);
      const Vector v = 2.0 * y - agents[i].z;
      const Vector exact = exact_prox(*objectives[i], v, cfg.solve.rho,
                                      *cfg.solve.bounds, agents[i].x);
      // Solver error propagates into the splitting state doubled: the
      // stacked perturbation is (e, 2e), of norm sqrt(5) ||e||.
      round_sq += 5.0 * (next.x - exact).squaredNorm();
      agents[i] = next;
    }
    acc += std::sqrt(round_sq);
  }
  return acc / static_cast<double>(rounds);
}

std::string trajectory_jsonl(const std::vector<RoundRecord>& records) {
  std::ostringstream out;
  for (const auto& rec : records) {
    nlohmann::json j;
    j["k"] = rec.k;
    j["active"] = rec.active;
    j["metric"] = rec.metric;
    j["cost"] = rec.cost;
    out << j.dump() << "\n";
  }
  return out.str();
}

}  // namespace fedplt
