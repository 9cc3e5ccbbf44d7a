// Federated splitting laboratory command line: generate synthetic problems,
// certify tuning points, run the algorithm, sweep experiment axes, and
// account privacy budgets.  Every output directory gets a manifest that
// reproduces the invocation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedplt/engine.hpp"
#include "fedplt/harness.hpp"
#include "fedplt/operators.hpp"
#include "fedplt/privacy.hpp"
#include "fedplt/problem.hpp"
#include "fedplt/rates.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoStablePoint = 3;
constexpr int kExitNumericalAbort = 4;

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("empty value list: " + csv);
  return out;
}

std::vector<int> parse_ints(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_doubles(csv)) out.push_back(static_cast<int>(v));
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  out << content;
}

/// Reproduction manifest written next to every artifact.
void write_manifest(const fs::path& path, const std::string& command,
                    const json& params, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
  json manifest;
  manifest["artifact_version"] = fedplt::kArtifactVersion;
  manifest["command"] = command;
  manifest["params"] = params;
  manifest["master_seed"] = seed;
  manifest["outputs"] = outputs;
  write_file(path, manifest.dump(2) + "\n");
}

fedplt::SolverType parse_solver(const std::string& name) {
  if (name == "gd") return fedplt::SolverType::Gd;
  if (name == "agd") return fedplt::SolverType::Agd;
  if (name == "sgd") return fedplt::SolverType::Sgd;
  if (name == "noisy") return fedplt::SolverType::NoisyGd;
  if (name == "exact") return fedplt::SolverType::ExactProx;
  throw std::invalid_argument("unknown solver: " + name);
}

fedplt::Participation parse_participation(const std::string& text,
                                          std::size_t num_agents) {
  fedplt::Participation pm;
  if (text == "full") {
    pm.kind = fedplt::ParticipationKind::Full;
    return pm;
  }
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    if (head == "bernoulli") {
      pm.kind = fedplt::ParticipationKind::Bernoulli;
      pm.p = std::stod(arg);
      return pm;
    }
    if (head == "subset") {
      pm.kind = fedplt::ParticipationKind::UniformSubset;
      pm.subset_size = std::stoi(arg);
      if (pm.subset_size < 1 ||
          static_cast<std::size_t>(pm.subset_size) > num_agents) {
        throw std::invalid_argument("subset size outside [1, N]");
      }
      return pm;
    }
  }
  throw std::invalid_argument(
      "participation must be full, bernoulli:<p>, or subset:<m>");
}

/// Two-agent one-dimensional quadratic fixture (minimizers at +-1, the
/// second agent twice as curved); lets `run` exercise the engine without a
/// dataset file.
struct QuadFixture {
  fedplt::ObjectiveList objectives;
  fedplt::ConvexityBounds bounds{1.0, 2.0};
};

QuadFixture quad_pair_fixture() {
  QuadFixture f;
  f.objectives.push_back(fedplt::scalar_quadratic(1.0, 1.0));
  f.objectives.push_back(fedplt::scalar_quadratic(-1.0, 2.0));
  return f;
}

int cmd_generate(const std::string& out_path, std::uint64_t seed,
                 std::uint32_t agents, std::uint32_t dim,
                 std::uint32_t per_agent, const std::string& reg,
                 double reg_weight, const std::string& h_kind, double h_weight,
                 double feature_scale) {
  fedplt::GenerateConfig cfg;
  cfg.seed = seed;
  cfg.num_agents = agents;
  cfg.dim = dim;
  cfg.per_agent = per_agent;
  if (reg == "l2") {
    cfg.regularizer.kind = fedplt::RegularizerKind::L2;
  } else if (reg == "nonconvex") {
    cfg.regularizer.kind = fedplt::RegularizerKind::Nonconvex;
  } else {
    throw std::invalid_argument("regularizer must be l2 or nonconvex");
  }
  cfg.regularizer.weight = reg_weight;
  if (h_kind == "zero") {
    cfg.nonsmooth.kind = fedplt::NonsmoothKind::Zero;
  } else if (h_kind == "l1") {
    cfg.nonsmooth.kind = fedplt::NonsmoothKind::L1;
  } else {
    throw std::invalid_argument("nonsmooth term must be zero or l1");
  }
  cfg.nonsmooth.weight = h_weight;
  cfg.feature_scale = feature_scale;

  const fedplt::ProblemInstance p = fedplt::generate_logistic_data(cfg);
  fedplt::save_problem(p, out_path);

  json params;
  params["seed"] = seed;
  params["agents"] = agents;
  params["dim"] = dim;
  params["per_agent"] = per_agent;
  params["regularizer"] = reg;
  params["reg_weight"] = reg_weight;
  params["nonsmooth"] = h_kind;
  params["nonsmooth_weight"] = h_weight;
  params["feature_scale"] = feature_scale;
  if (p.bounds.valid()) {
    params["lambda_lo"] = p.bounds.lambda_lo;
    params["lambda_hi"] = p.bounds.lambda_hi;
  }
  write_manifest(out_path + ".manifest.json", "generate", params, seed,
                 {out_path});
  std::cout << "wrote " << out_path << " (" << agents << " agents, dim " << dim
            << ", " << per_agent << " samples each)\n";
  return kExitOk;
}

int cmd_tune(const std::string& dataset, const std::string& solver_name,
             const std::string& rho_grid, const std::string& gamma_grid,
             const std::string& ne_grid, double p_lo,
             const std::string& format, const std::string& out_path) {
  const fedplt::ProblemInstance p = fedplt::load_problem(dataset);
  const fedplt::ConvexityBounds bounds =
      p.bounds.valid() ? p.bounds : fedplt::smoothness_bounds(p);

  fedplt::TuneGrid grid;
  grid.solver = parse_solver(solver_name);
  grid.rho_values = parse_doubles(rho_grid);
  if (!gamma_grid.empty()) grid.gamma_values = parse_doubles(gamma_grid);
  grid.ne_values = parse_ints(ne_grid);
  grid.p_lo = p_lo;

  const fedplt::TuneResult result = fedplt::tune_grid(bounds, grid);
  const std::string table = format == "json"
                                ? fedplt::tuning_table_json(result)
                                : fedplt::tuning_table_csv(result);
  if (out_path.empty()) {
    std::cout << table;
  } else {
    write_file(out_path, table);
    json params;
    params["dataset"] = dataset;
    params["solver"] = solver_name;
    params["rho_grid"] = rho_grid;
    params["gamma_grid"] = gamma_grid;
    params["ne_grid"] = ne_grid;
    params["p_lo"] = p_lo;
    params["format"] = format;
    write_manifest(out_path + ".manifest.json", "tune", params, p.seed,
                   {out_path});
  }
  const auto& best = result.entries[result.best];
  std::cout << "best: rho=" << best.rho << " gamma=" << best.gamma
            << " epochs=" << best.epochs
            << " spectral_norm=" << best.report.spectral_norm
            << " spectral_radius=" << best.report.spectral_radius << "\n";
  return kExitOk;
}

int cmd_run(const std::string& dataset, bool quad_fixture,
            const std::string& solver_name, double rho, double gamma, int ne,
            int batch, double tau_sq, double clip,
            const std::string& participation, int rounds, std::uint64_t seed,
            double t_grad, double t_comm, double threshold,
            const std::string& metric_name, const std::string& out_dir) {
  fedplt::ObjectiveList objectives;
  fedplt::NonsmoothSpec h;
  std::optional<fedplt::ConvexityBounds> bounds;
  fedplt::ProblemInstance p;
  if (quad_fixture) {
    QuadFixture f = quad_pair_fixture();
    objectives = std::move(f.objectives);
    bounds = f.bounds;
  } else {
    if (dataset.empty()) {
      throw std::invalid_argument("run needs --dataset or --quad-fixture");
    }
    p = fedplt::load_problem(dataset);
    objectives = fedplt::make_objectives(p);
    h = p.nonsmooth;
    if (p.bounds.valid()) bounds = p.bounds;
  }

  fedplt::RunConfig cfg;
  cfg.solve.type = parse_solver(solver_name);
  if (cfg.solve.type == fedplt::SolverType::NoisyGd && tau_sq <= 0.0) {
    throw std::invalid_argument("the noisy solver needs --tau-sq > 0");
  }
  cfg.solve.rho = rho;
  cfg.solve.gamma = gamma;
  cfg.solve.epochs = ne;
  cfg.solve.batch = batch;
  cfg.solve.tau_sq = tau_sq;
  if (clip > 0.0) cfg.solve.clip = clip;
  cfg.solve.bounds = bounds;
  cfg.participation = parse_participation(participation, objectives.size());
  cfg.rounds = rounds;
  cfg.seed = seed;
  cfg.t_grad = t_grad;
  cfg.t_comm = t_comm;

  if (metric_name == "gradnorm") {
    cfg.metric = fedplt::MetricKind::GradNormSq;
  } else if (metric_name == "distance") {
    cfg.metric = fedplt::MetricKind::ConsensusDistance;
  } else if (metric_name == "stacked") {
    cfg.metric = fedplt::MetricKind::StackedDistance;
  } else if (metric_name != "auto") {
    throw std::invalid_argument(
        "metric must be auto, gradnorm, distance, or stacked");
  }

  // Distance metrics (explicit, or implied by a composite nonsmooth term)
  // need the splitting fixed point as reference.
  const bool needs_reference =
      (cfg.metric && *cfg.metric != fedplt::MetricKind::GradNormSq) ||
      (!cfg.metric && h.kind != fedplt::NonsmoothKind::Zero);
  if (needs_reference) {
    if (!bounds) {
      throw std::invalid_argument(
          "distance metrics need convexity bounds for the reference solve");
    }
    cfg.reference =
        fedplt::prs_reference_solve(objectives, *bounds, h, rho);
  }

  const fedplt::RunResult result = fedplt::run(objectives, h, cfg);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_file(dir / "trajectory.jsonl",
             fedplt::trajectory_jsonl(result.records));

  const auto crossing = fedplt::time_to_threshold(result.records, threshold);
  json summary;
  summary["rounds"] = rounds;
  summary["final_metric"] = result.records.back().metric;
  summary["total_cost"] = result.records.back().cost;
  summary["threshold"] = threshold;
  summary["threshold_reached"] = crossing.has_value();
  if (crossing) summary["time_to_threshold"] = *crossing;
  summary["outside_rate_model"] = result.outside_rate_model;
  summary["x_bar"] = std::vector<double>(
      result.x_bar.data(), result.x_bar.data() + result.x_bar.size());
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  json params;
  params["dataset"] = dataset;
  params["quad_fixture"] = quad_fixture;
  params["solver"] = solver_name;
  params["rho"] = rho;
  params["gamma"] = gamma;
  if (bounds) params["gamma_resolved"] = fedplt::resolve_step(cfg.solve);
  params["epochs"] = ne;
  params["batch"] = batch;
  params["tau_sq"] = tau_sq;
  params["clip"] = clip;
  params["participation"] = participation;
  params["rounds"] = rounds;
  params["t_grad"] = t_grad;
  params["t_comm"] = t_comm;
  params["threshold"] = threshold;
  params["metric"] = metric_name;
  write_manifest(dir / "manifest.json", "run", params, seed,
                 {(dir / "trajectory.jsonl").string(),
                  (dir / "summary.json").string()});

  std::cout << "final metric " << result.records.back().metric << " after "
            << rounds << " rounds; threshold "
            << (crossing ? "reached at cost " + std::to_string(*crossing)
                         : std::string("not reached"))
            << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& dataset, const std::string& axis_name,
              const std::string& values, int seeds, const std::string& solver,
              double rho, double gamma, int ne, int batch, double tau_sq,
              const std::string& participation, int rounds,
              std::uint64_t master_seed, double t_grad, double t_comm,
              double threshold, const std::string& outcome_name,
              const std::string& format, const std::string& out_path) {
  const fedplt::ProblemInstance p = fedplt::load_problem(dataset);
  const fedplt::ObjectiveList objectives = fedplt::make_objectives(p);

  fedplt::RunConfig base;
  base.solve.type = parse_solver(solver);
  base.solve.rho = rho;
  base.solve.gamma = gamma;
  base.solve.epochs = ne;
  base.solve.batch = batch;
  base.solve.tau_sq = tau_sq;
  if (p.bounds.valid()) base.solve.bounds = p.bounds;
  base.participation = parse_participation(participation, objectives.size());
  base.rounds = rounds;
  base.t_grad = t_grad;
  base.t_comm = t_comm;

  fedplt::SweepSpec spec;
  if (axis_name == "ne") {
    spec.axis = fedplt::SweepAxis::Epochs;
  } else if (axis_name == "rho") {
    spec.axis = fedplt::SweepAxis::Rho;
  } else if (axis_name == "tau") {
    spec.axis = fedplt::SweepAxis::TauSq;
  } else if (axis_name == "participation") {
    spec.axis = fedplt::SweepAxis::ParticipationFraction;
  } else if (axis_name == "tc") {
    spec.axis = fedplt::SweepAxis::CommCost;
  } else {
    throw std::invalid_argument(
        "axis must be ne, rho, tau, participation, or tc");
  }
  spec.values = parse_doubles(values);
  spec.seeds = seeds;
  spec.threshold = threshold;
  spec.master_seed = master_seed;
  if (outcome_name == "time") {
    spec.outcome = fedplt::OutcomeKind::TimeToThreshold;
  } else if (outcome_name == "asymptote") {
    spec.outcome = fedplt::OutcomeKind::AsymptoticError;
  } else {
    throw std::invalid_argument("outcome must be time or asymptote");
  }

  // Distance-based outcomes on noisy runs measure against the fixed point.
  if (spec.outcome == fedplt::OutcomeKind::AsymptoticError &&
      base.solve.type == fedplt::SolverType::NoisyGd) {
    if (p.bounds.valid()) {
      base.reference = fedplt::prs_reference_solve(p, rho);
      base.metric = fedplt::MetricKind::StackedDistance;
    }
  }

  const auto rows = fedplt::sweep(objectives, p.nonsmooth, base, spec);
  const auto table_format = format == "json" ? fedplt::TableFormat::Json
                                             : fedplt::TableFormat::Csv;
  const std::string table = fedplt::emit_table(rows, table_format);
  if (out_path.empty()) {
    std::cout << table;
  } else {
    write_file(out_path, table);
    json params;
    params["dataset"] = dataset;
    params["axis"] = axis_name;
    params["values"] = values;
    params["seeds"] = seeds;
    params["solver"] = solver;
    params["rho"] = rho;
    params["gamma"] = gamma;
    params["epochs"] = ne;
    params["batch"] = batch;
    params["tau_sq"] = tau_sq;
    params["participation"] = participation;
    params["rounds"] = rounds;
    params["t_grad"] = t_grad;
    params["t_comm"] = t_comm;
    params["threshold"] = threshold;
    params["outcome"] = outcome_name;
    params["format"] = format;
    write_manifest(out_path + ".manifest.json", "sweep", params, master_seed,
                   {out_path});
  }
  return kExitOk;
}

int cmd_privacy(const std::string& dataset, const std::string& q_list,
                double clip_bound, double tau_sq, double gamma, double order,
                int rounds, int ne, double lambda_lo, double rho,
                const std::string& delta_list, const std::string& format,
                const std::string& out_path) {
  std::vector<std::size_t> q;
  double lo = lambda_lo;
  double hi = 0.0;
  if (!dataset.empty()) {
    const fedplt::ProblemInstance p = fedplt::load_problem(dataset);
    for (const auto& d : p.datasets) q.push_back(d.size());
    if (p.bounds.valid()) {
      if (lo <= 0.0) lo = p.bounds.lambda_lo;
      hi = p.bounds.lambda_hi;
    }
  } else if (!q_list.empty()) {
    for (int v : parse_ints(q_list)) {
      if (v < 1) throw std::invalid_argument("sample counts must be >= 1");
      q.push_back(static_cast<std::size_t>(v));
    }
  } else {
    throw std::invalid_argument("privacy needs --dataset or --q");
  }
  if (lo <= 0.0) {
    throw std::invalid_argument(
        "privacy needs --lambda-lo (or a dataset with a convexity certificate)");
  }

  fedplt::PrivacyParams pp;
  pp.clip_bound = clip_bound;
  pp.tau_sq = tau_sq;
  pp.gamma = gamma;
  pp.lambda_order = order;
  pp.rounds = rounds;
  pp.epochs = ne;

  if (hi > 0.0) {
    const double cap = 2.0 / (hi + 1.0 / rho);
    if (gamma >= cap) {
      std::cerr << "warning: step " << gamma
                << " breaks the accounting precondition gamma < " << cap
                << " for this instance\n";
    }
  }

  const std::vector<double> deltas = delta_list.empty()
                                         ? fedplt::default_adp_deltas()
                                         : parse_doubles(delta_list);
  const fedplt::PrivacyReport report =
      fedplt::build_privacy_report(pp, lo, q, deltas);
  const std::string rendered = format == "json"
                                   ? fedplt::privacy_report_json(report)
                                   : fedplt::privacy_report_csv(report);
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    write_file(out_path, rendered);
    json params;
    params["dataset"] = dataset;
    params["q"] = q_list;
    params["clip"] = clip_bound;
    params["tau_sq"] = tau_sq;
    params["gamma"] = gamma;
    params["order"] = order;
    params["rounds"] = rounds;
    params["epochs"] = ne;
    params["lambda_lo"] = lo;
    params["rho"] = rho;
    params["deltas"] = delta_list;
    params["format"] = format;
    write_manifest(out_path + ".manifest.json", "privacy", params, 0,
                   {out_path});
  }
  std::cout << "worst-case renyi epsilon " << report.eps_rdp_worst << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated splitting laboratory"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic problem file");
  std::string gen_out = "problem.fplt";
  std::uint64_t gen_seed = 1;
  std::uint32_t gen_agents = 10, gen_dim = 5, gen_q = 50;
  std::string gen_reg = "l2", gen_h = "zero";
  double gen_reg_weight = 0.5, gen_h_weight = 0.0, gen_scale = 4.0;
  gen->add_option("--out", gen_out, "output path");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--agents", gen_agents, "number of agents");
  gen->add_option("--dim", gen_dim, "model dimension");
  gen->add_option("--per-agent", gen_q, "samples per agent");
  gen->add_option("--reg", gen_reg, "regularizer: l2 | nonconvex");
  gen->add_option("--reg-weight", gen_reg_weight, "regularizer weight");
  gen->add_option("--nonsmooth", gen_h, "shared nonsmooth term: zero | l1");
  gen->add_option("--nonsmooth-weight", gen_h_weight, "nonsmooth weight");
  gen->add_option("--feature-scale", gen_scale, "feature magnitude knob");

  // tune
  auto* tune = app.add_subcommand("tune", "grid-search a stability certificate");
  std::string tune_dataset, tune_solver = "gd", tune_rho = "0.5,1,2";
  std::string tune_gamma, tune_ne = "1,2,5,8", tune_format = "csv",
              tune_out;
  double tune_p_lo = 1.0;
  tune->add_option("--dataset", tune_dataset, "problem file")->required();
  tune->add_option("--solver", tune_solver, "gd | agd");
  tune->add_option("--rho-grid", tune_rho, "comma-separated rho values");
  tune->add_option("--gamma-grid", tune_gamma,
                   "comma-separated steps (default: rate-optimal per rho)");
  tune->add_option("--ne-grid", tune_ne, "comma-separated epoch counts");
  tune->add_option("--p-lo", tune_p_lo, "smallest participation probability");
  tune->add_option("--format", tune_format, "csv | json");
  tune->add_option("--out", tune_out, "table output path (default stdout)");

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a federated run");
  std::string run_dataset, run_solver = "gd", run_participation = "full";
  std::string run_metric = "auto", run_out_dir = "run_out";
  bool run_quad = false;
  double run_rho = 1.0, run_gamma = 0.0, run_tau = 0.0, run_clip = 0.0;
  double run_tg = 1.0, run_tc = 0.0, run_threshold = 1e-5;
  int run_ne = 5, run_batch = 10, run_rounds = 200;
  std::uint64_t run_seed = 1;
  run_cmd->add_option("--dataset", run_dataset, "problem file");
  run_cmd->add_flag("--quad-fixture", run_quad,
                    "use the built-in two-agent quadratic fixture");
  run_cmd->add_option("--solver", run_solver, "gd | agd | sgd | noisy | exact");
  run_cmd->add_option("--rho", run_rho, "splitting penalty");
  run_cmd->add_option("--gamma", run_gamma, "step size (0 = rate-optimal)");
  run_cmd->add_option("--ne", run_ne, "local epochs per round");
  run_cmd->add_option("--batch", run_batch, "sgd minibatch size");
  run_cmd->add_option("--tau-sq,--tau", run_tau, "noise variance scale");
  run_cmd->add_option("--clip", run_clip, "per-sample clip bound (0 = off)");
  run_cmd->add_option("--participation", run_participation,
                      "full | bernoulli:<p> | subset:<m>");
  run_cmd->add_option("--rounds", run_rounds, "round count");
  run_cmd->add_option("--seed", run_seed, "run seed");
  run_cmd->add_option("--tg", run_tg, "cost per gradient epoch");
  run_cmd->add_option("--tc", run_tc, "cost per agent-round of communication");
  run_cmd->add_option("--threshold", run_threshold, "convergence threshold");
  run_cmd->add_option("--metric", run_metric,
                      "auto | gradnorm | distance | stacked");
  run_cmd->add_option("--out-dir", run_out_dir, "output directory");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "aggregate runs along one axis");
  std::string sw_dataset, sw_axis = "ne", sw_values = "1,2,5",
              sw_solver = "gd";
  std::string sw_participation = "full", sw_outcome = "time",
              sw_format = "csv", sw_out;
  int sw_seeds = 20, sw_ne = 5, sw_batch = 10, sw_rounds = 200;
  double sw_rho = 1.0, sw_gamma = 0.0, sw_tau = 0.0, sw_tg = 1.0, sw_tc = 0.0;
  double sw_threshold = 1e-5;
  std::uint64_t sw_seed = 1;
  sweep_cmd->add_option("--dataset", sw_dataset, "problem file")->required();
  sweep_cmd->add_option("--axis", sw_axis,
                        "ne | rho | tau | participation | tc");
  sweep_cmd->add_option("--values", sw_values, "comma-separated axis values");
  sweep_cmd->add_option("--seeds", sw_seeds, "seeds per axis value");
  sweep_cmd->add_option("--solver", sw_solver, "gd | agd | sgd | noisy | exact");
  sweep_cmd->add_option("--rho", sw_rho, "splitting penalty");
  sweep_cmd->add_option("--gamma", sw_gamma, "step size (0 = rate-optimal)");
  sweep_cmd->add_option("--ne", sw_ne, "local epochs per round");
  sweep_cmd->add_option("--batch", sw_batch, "sgd minibatch size");
  sweep_cmd->add_option("--tau-sq,--tau", sw_tau, "noise variance scale");
  sweep_cmd->add_option("--participation", sw_participation,
                        "full | bernoulli:<p> | subset:<m>");
  sweep_cmd->add_option("--rounds", sw_rounds, "round count");
  sweep_cmd->add_option("--seed", sw_seed, "master seed");
  sweep_cmd->add_option("--tg", sw_tg, "cost per gradient epoch");
  sweep_cmd->add_option("--tc", sw_tc, "cost per agent-round of communication");
  sweep_cmd->add_option("--threshold", sw_threshold, "convergence threshold");
  sweep_cmd->add_option("--outcome", sw_outcome, "time | asymptote");
  sweep_cmd->add_option("--format", sw_format, "csv | json");
  sweep_cmd->add_option("--out", sw_out, "table output path (default stdout)");

  // privacy
  auto* priv = app.add_subcommand("privacy", "account a noisy-run budget");
  std::string pv_dataset, pv_q, pv_deltas, pv_format = "csv", pv_out;
  double pv_clip = 1.0, pv_tau = 1.0, pv_gamma = 0.1, pv_order = 2.0;
  double pv_lambda_lo = 0.0, pv_rho = 1.0;
  int pv_rounds = 10, pv_ne = 5;
  priv->add_option("--dataset", pv_dataset, "problem file (supplies q and bounds)");
  priv->add_option("--q", pv_q, "comma-separated per-agent sample counts");
  priv->add_option("--clip,--L", pv_clip, "sensitivity bound L");
  priv->add_option("--tau-sq,--tau", pv_tau, "noise variance scale");
  priv->add_option("--gamma", pv_gamma, "inner step size");
  priv->add_option("--order,--lambda-order", pv_order, "divergence order (> 1)");
  priv->add_option("--rounds", pv_rounds, "round count K");
  priv->add_option("--ne", pv_ne, "local epochs per round");
  priv->add_option("--lambda-lo", pv_lambda_lo,
                   "strong-convexity modulus (from dataset when omitted)");
  priv->add_option("--rho", pv_rho, "splitting penalty (precondition check)");
  priv->add_option("--deltas", pv_deltas, "comma-separated delta values");
  priv->add_option("--format", pv_format, "csv | json");
  priv->add_option("--out", pv_out, "report output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(gen_out, gen_seed, gen_agents, gen_dim, gen_q,
                          gen_reg, gen_reg_weight, gen_h, gen_h_weight,
                          gen_scale);
    }
    if (tune->parsed()) {
      return cmd_tune(tune_dataset, tune_solver, tune_rho, tune_gamma, tune_ne,
                      tune_p_lo, tune_format, tune_out);
    }
    if (run_cmd->parsed()) {
      return cmd_run(run_dataset, run_quad, run_solver, run_rho, run_gamma,
                     run_ne, run_batch, run_tau, run_clip, run_participation,
                     run_rounds, run_seed, run_tg, run_tc, run_threshold,
                     run_metric, run_out_dir);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sw_dataset, sw_axis, sw_values, sw_seeds, sw_solver,
                       sw_rho, sw_gamma, sw_ne, sw_batch, sw_tau,
                       sw_participation, sw_rounds, sw_seed, sw_tg, sw_tc,
                       sw_threshold, sw_outcome, sw_format, sw_out);
    }
    if (priv->parsed()) {
      return cmd_privacy(pv_dataset, pv_q, pv_clip, pv_tau, pv_gamma, pv_order,
                         pv_rounds, pv_ne, pv_lambda_lo, pv_rho, pv_deltas,
                         pv_format, pv_out);
    }
  } catch (const fedplt::NoStableTuning& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoStablePoint;
  } catch (const fedplt::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalAbort;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
