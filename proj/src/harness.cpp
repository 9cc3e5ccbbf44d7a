#include "fedplt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace fedplt {
namespace {

constexpr const char* kNotReached = "not_reached";

double round_sig6(double x) {
  if (!std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return std::strtod(buf, nullptr);
}

std::string format_sig6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

int worker_count() {
  const char* env = std::getenv("FEDPLT_WORKERS");
  if (env == nullptr) return 1;
  const int workers = std::atoi(env);
  return workers >= 1 ? workers : 1;
}

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Epochs:
      return "epochs";
    case SweepAxis::Rho:
      return "rho";
    case SweepAxis::TauSq:
      return "tau_sq";
    case SweepAxis::ParticipationFraction:
      return "participation";
    case SweepAxis::CommCost:
      return "t_comm";
  }
  return "unknown";
}

RunConfig apply_axis(RunConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::Epochs:
      require(value >= 1.0 && value == std::floor(value),
              "sweep: epoch values must be positive integers");
      cfg.solve.epochs = static_cast<int>(value);
      return cfg;
    case SweepAxis::Rho:
      require(value > 0.0, "sweep: rho values must be > 0");
      cfg.solve.rho = value;
      return cfg;
    case SweepAxis::TauSq:
      require(value >= 0.0, "sweep: tau^2 values must be >= 0");
      require(cfg.solve.type == SolverType::NoisyGd,
              "sweep: the tau_sq axis needs the noisy solver");
      cfg.solve.tau_sq = value;
      return cfg;
    case SweepAxis::ParticipationFraction:
      require(value > 0.0 && value <= 1.0,
              "sweep: participation fractions must lie in (0,1]");
      cfg.participation.kind = value == 1.0 ? ParticipationKind::Full
                                            : ParticipationKind::Bernoulli;
      cfg.participation.p = value;
      cfg.participation.per_agent.clear();
      return cfg;
    case SweepAxis::CommCost:
      require(value >= 0.0, "sweep: communication costs must be >= 0");
      cfg.t_comm = value;
      return cfg;
  }
  throw std::invalid_argument("sweep: unknown axis");
}

}  // namespace

double cost_per_round(int epochs, std::size_t active_count,
                      const CostModel& cm) {
  require(epochs >= 1, "cost: epochs must be >= 1");
  require(cm.t_grad >= 0.0 && cm.t_comm >= 0.0,
          "cost: time weights must be >= 0");
  return (static_cast<double>(epochs) * cm.t_grad + cm.t_comm) *
         static_cast<double>(active_count);
}

std::optional<double> time_to_threshold(
    const std::vector<RoundRecord>& records, double threshold) {
  require(!records.empty(), "time to threshold: empty trajectory");
  require(threshold >= 0.0, "time to threshold: threshold must be >= 0");
  for (const auto& rec : records) {
    if (rec.metric <= threshold) return rec.cost;
  }
  return std::nullopt;
}

double asymptotic_error(const std::vector<RoundRecord>& records,
                        double tail_fraction) {
  require(!records.empty(), "asymptotic error: empty trajectory");
  require(tail_fraction > 0.0 && tail_fraction <= 1.0,
          "asymptotic error: tail fraction must lie in (0,1]");
  const std::size_t rounds = records.size() - 1;
  const std::size_t tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(tail_fraction * static_cast<double>(rounds))));
  double acc = 0.0;
  for (std::size_t i = records.size() - tail; i < records.size(); ++i) {
    acc += records[i].metric;
  }
  return acc / static_cast<double>(tail);
}

MonteCarloStats monte_carlo(
    const std::function<std::optional<double>(std::uint64_t)>& eval,
    int n_seeds, std::uint64_t master_seed) {
  require(n_seeds >= 1, "monte carlo: need at least one seed");
  std::vector<std::optional<double>> values(
      static_cast<std::size_t>(n_seeds));

  const int workers = std::min(worker_count(), n_seeds);
  if (workers <= 1) {
    for (int i = 0; i < n_seeds; ++i) {
      values[static_cast<std::size_t>(i)] =
          eval(master_seed + static_cast<std::uint64_t>(i));
    }
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int i = w; i < n_seeds; i += workers) {
          values[static_cast<std::size_t>(i)] =
              eval(master_seed + static_cast<std::uint64_t>(i));
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  MonteCarloStats stats;
  stats.n_seeds = n_seeds;
  double acc = 0.0;
  for (const auto& v : values) {
    if (!v) continue;
    if (stats.n_reached == 0) {
      stats.min = *v;
      stats.max = *v;
    } else {
      stats.min = std::min(stats.min, *v);
      stats.max = std::max(stats.max, *v);
    }
    acc += *v;
    ++stats.n_reached;
  }
  if (stats.n_reached > 0) {
    stats.mean = acc / static_cast<double>(stats.n_reached);
  } else {
    stats.mean = std::numeric_limits<double>::quiet_NaN();
    stats.min = stats.mean;
    stats.max = stats.mean;
  }
  stats.all_reached = stats.n_reached == n_seeds;
  return stats;
}

std::vector<TableRow> sweep(const ObjectiveList& objectives,
                            const NonsmoothSpec& h, const RunConfig& base,
                            const SweepSpec& spec) {
  require(!spec.values.empty(), "sweep: no axis values");
  require(spec.seeds >= 1, "sweep: need at least one seed");
  std::vector<TableRow> rows;
  rows.reserve(spec.values.size());
  for (double value : spec.values) {
    const RunConfig cfg = apply_axis(base, spec.axis, value);
    const MonteCarloStats stats = monte_carlo(
        [&](std::uint64_t seed) -> std::optional<double> {
          RunConfig seeded = cfg;
          seeded.seed = seed;
          const RunResult res = run(objectives, h, seeded);
          if (spec.outcome == OutcomeKind::TimeToThreshold) {
            return time_to_threshold(res.records, spec.threshold);
          }
          return asymptotic_error(res.records, spec.tail_fraction);
        },
        spec.seeds, spec.master_seed);

    TableRow row;
    row.config = std::string(axis_name(spec.axis)) + "=" + format_sig6(value);
    row.axis_value = value;
    row.mean = stats.mean;
    row.min = stats.min;
    row.max = stats.max;
    row.n_seeds = stats.n_seeds;
    row.reached = stats.all_reached;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string emit_table(const std::vector<TableRow>& rows, TableFormat format) {
  if (format == TableFormat::Csv) {
    std::ostringstream out;
    out << "config,axis_value,mean,min,max,n_seeds,reached\n";
    for (const auto& row : rows) {
      out << row.config << "," << format_sig6(row.axis_value) << ",";
      if (row.reached) {
        out << format_sig6(row.mean) << "," << format_sig6(row.min) << ","
            << format_sig6(row.max);
      } else {
        out << kNotReached << "," << kNotReached << "," << kNotReached;
      }
      out << "," << row.n_seeds << "," << (row.reached ? 1 : 0) << "\n";
    }
    return out.str();
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["config"] = row.config;
    j["axis_value"] = round_sig6(row.axis_value);
    if (row.reached) {
      j["mean"] = round_sig6(row.mean);
      j["min"] = round_sig6(row.min);
      j["max"] = round_sig6(row.max);
    } else {
      j["mean"] = nullptr;
      j["min"] = nullptr;
      j["max"] = nullptr;
    }
    j["n_seeds"] = row.n_seeds;
    j["reached"] = row.reached;
    table.push_back(std::move(j));
  }
  return table.dump(2);
}

std::vector<TableRow> parse_table(const std::string& text,
                                  TableFormat format) {
  std::vector<TableRow> rows;
  if (format == TableFormat::Csv) {
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      std::istringstream cells(line);
      std::string cell;
      TableRow row;
      auto next = [&]() {
        if (!std::getline(cells, cell, ',')) {
          throw std::runtime_error("table parse: short row");
        }
        return cell;
      };
      row.config = next();
      row.axis_value = std::stod(next());
      const std::string mean = next();
      const std::string min = next();
      const std::string max = next();
      row.n_seeds = std::stoi(next());
      row.reached = std::stoi(next()) != 0;
      if (row.reached) {
        row.mean = std::stod(mean);
        row.min = std::stod(min);
        row.max = std::stod(max);
      } else {
        if (mean != kNotReached || min != kNotReached || max != kNotReached) {
          throw std::runtime_error("table parse: bad sentinel row");
        }
        row.mean = std::numeric_limits<double>::quiet_NaN();
        row.min = row.mean;
        row.max = row.mean;
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }
  const nlohmann::json table = nlohmann::json::parse(text);
  if (!table.is_array()) throw std::runtime_error("table parse: not an array");
  for (const auto& j : table) {
    TableRow row;
    row.config = j.at("config").get<std::string>();
    row.axis_value = j.at("axis_value").get<double>();
    row.n_seeds = j.at("n_seeds").get<int>();
    row.reached = j.at("reached").get<bool>();
    if (row.reached) {
      row.mean = j.at("mean").get<double>();
      row.min = j.at("min").get<double>();
      row.max = j.at("max").get<double>();
    } else {
      row.mean = std::numeric_limits<double>::quiet_NaN();
      row.min = row.mean;
      row.max = row.mean;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fedplt
