#include "fedplt/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fedplt {
namespace {

void check_params(const PrivacyParams& pp, double lambda_lo) {
  require(pp.clip_bound > 0.0, "privacy: clip bound L must be > 0");
  require(pp.tau_sq > 0.0, "privacy: tau^2 must be > 0");
  require(pp.gamma > 0.0, "privacy: step size must be > 0");
  require(pp.lambda_order > 1.0, "privacy: Renyi order must be > 1");
  require(pp.rounds >= 0, "privacy: round count must be >= 0");
  require(pp.epochs >= 1, "privacy: epoch count must be >= 1");
  require(lambda_lo > 0.0, "privacy: lambda_lo must be > 0");
}

std::string format_sig6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

Vector clip_gradient(const Vector& g, double clip_bound) {
  require(clip_bound > 0.0, "clip: bound must be > 0");
  const double norm = g.norm();
  if (norm == 0.0) return g;
  const double scale = std::min(1.0, clip_bound / (2.0 * norm));
  return scale * g;
}

double rdp_epsilon_agent(const PrivacyParams& pp, double lambda_lo,
                         std::size_t q_i) {
  check_params(pp, lambda_lo);
  require(q_i >= 1, "privacy: agent sample count must be >= 1");
  const double q = static_cast<double>(q_i);
  const double factor = pp.lambda_order * pp.clip_bound * pp.clip_bound /
                        (lambda_lo * pp.tau_sq * q * q);
  const double exponent = lambda_lo * pp.gamma *
                          static_cast<double>(pp.rounds) *
                          static_cast<double>(pp.epochs) / 2.0;
  return factor * (-std::expm1(-exponent));
}

double rdp_epsilon_worst(const PrivacyParams& pp, double lambda_lo,
                         const std::vector<std::size_t>& q) {
  require(!q.empty(), "privacy: need at least one agent");
  const std::size_t q_min = *std::min_element(q.begin(), q.end());
  return rdp_epsilon_agent(pp, lambda_lo, q_min);
}

double rdp_epsilon_limit(const PrivacyParams& pp, double lambda_lo,
                         std::size_t q_i) {
  check_params(pp, lambda_lo);
  require(q_i >= 1, "privacy: agent sample count must be >= 1");
  const double q = static_cast<double>(q_i);
  return pp.lambda_order * pp.clip_bound * pp.clip_bound /
         (lambda_lo * pp.tau_sq * q * q);
}

double rdp_to_adp(double eps_rdp, double lambda_order, double delta) {
  require(eps_rdp >= 0.0, "privacy: eps must be >= 0");
  require(lambda_order > 1.0, "privacy: Renyi order must be > 1");
  require(delta > 0.0 && delta < 1.0, "privacy: delta must lie in (0,1)");
  return eps_rdp + std::log(1.0 / delta) / (lambda_order - 1.0);
}

Vector private_init(int dim, double tau_sq, double lambda_lo,
                    std::mt19937_64& rng) {
  require(dim >= 1, "private init: dimension must be >= 1");
  require(tau_sq >= 0.0, "private init: tau^2 must be >= 0");
  require(lambda_lo > 0.0, "private init: lambda_lo must be > 0");
  if (tau_sq == 0.0) return Vector::Zero(dim);
  const double sd = std::sqrt(2.0 * tau_sq / lambda_lo);
  std::normal_distribution<double> normal(0.0, 1.0);
  return Vector::NullaryExpr(dim,
                             [&](Eigen::Index) { return sd * normal(rng); });
}

PrivacyAccuracyBound privacy_accuracy_bound(double s_norm, double chi,
                                            int epochs, double tau_sq, int dim,
                                            int num_agents, double gamma,
                                            int rounds, double initial_dist) {
  require(s_norm >= 0.0, "accuracy bound: spectral norm must be >= 0");
  require(chi >= 0.0, "accuracy bound: chi must be >= 0");
  require(epochs >= 1, "accuracy bound: epochs must be >= 1");
  require(tau_sq >= 0.0, "accuracy bound: tau^2 must be >= 0");
  require(dim >= 1 && num_agents >= 1, "accuracy bound: bad dimensions");
  require(gamma > 0.0, "accuracy bound: step must be > 0");
  require(rounds >= 0, "accuracy bound: rounds must be >= 0");
  require(initial_dist >= 0.0, "accuracy bound: distance must be >= 0");

  const double k = static_cast<double>(rounds);
  const double pow_k = std::pow(s_norm, k);
  // Geometric partial sum 1 + s + ... + s^{K-1}; still the partial sum for
  // s >= 1 (the bound then carries no asymptote).
  double partial_sum;
  if (s_norm == 1.0) {
    partial_sum = k;
  } else {
    partial_sum = (1.0 - pow_k) / (1.0 - s_norm);
  }
  const double chi_sum =
      chi == 1.0 ? static_cast<double>(epochs)
                 : (1.0 - std::pow(chi, epochs)) / (1.0 - chi);
  const double nu = std::sqrt(tau_sq) *
                    std::sqrt(10.0 * dim * num_agents * gamma) * chi_sum;
  PrivacyAccuracyBound out;
  out.value = pow_k * initial_dist + partial_sum * nu;
  out.contractive = s_norm < 1.0;
  return out;
}

double privacy_accuracy_asymptote(double s_norm, double chi, int epochs,
                                  double tau_sq, int dim, int num_agents,
                                  double gamma) {
  require(s_norm >= 0.0 && s_norm < 1.0,
          "accuracy asymptote: spectral norm must lie in [0,1)");
  require(chi >= 0.0, "accuracy asymptote: chi must be >= 0");
  require(epochs >= 1, "accuracy asymptote: epochs must be >= 1");
  const double chi_sum =
      chi == 1.0 ? static_cast<double>(epochs)
                 : (1.0 - std::pow(chi, epochs)) / (1.0 - chi);
  return std::sqrt(tau_sq) * std::sqrt(10.0 * dim * num_agents * gamma) *
         chi_sum / (1.0 - s_norm);
}

SensitivityOutcome sensitivity_check(const LocalDataset& d,
                                     const RegularizerSpec& r, double clip_bound,
                                     int trials, std::uint64_t seed,
                                     bool clipped) {
  require(!d.points.empty(), "sensitivity check: empty dataset");
  require(clip_bound >= 0.0, "sensitivity check: L must be >= 0");
  require(trials >= 1, "sensitivity check: need at least one trial");
  if (clipped) {
    require(clip_bound > 0.0, "sensitivity check: clipped mode needs L > 0");
  }
  const std::size_t q = d.points.size();
  const int n = static_cast<int>(d.points.front().features.size());
  const double budget = clip_bound / static_cast<double>(q);

  // Feature scale of the probe distribution, taken from the data itself.
  double max_norm = 0.0;
  std::size_t max_index = 0;
  for (std::size_t j = 0; j < q; ++j) {
    const double norm = d.points[j].features.norm();
    if (norm > max_norm) {
      max_norm = norm;
      max_index = j;
    }
  }

  // Data-term gradient average with sample `swap` replaced by `repl`
  // (regularizer terms cancel between neighboring datasets).
  auto data_mean = [&](const Vector& x, std::size_t swap,
                       const DataPoint& repl) -> Vector {
    Vector g = Vector::Zero(n);
    for (std::size_t j = 0; j < q; ++j) {
      const DataPoint& pt = j == swap ? repl : d.points[j];
      Vector sg = logistic_sample_gradient(x, pt);
      g += clipped ? clip_gradient(sg, clip_bound) : sg;
    }
    return g / static_cast<double>(q);
  };

  SensitivityOutcome out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, {kStreamCheck, static_cast<std::uint32_t>(t)});
    std::size_t swap;
    DataPoint repl;
    Vector x(n);
    if (t == 0) {
      // Deterministic probe: mirror the largest-norm sample and push the
      // model far along it so both logistic factors saturate.
      swap = max_index;
      repl.features = -d.points[max_index].features;
      repl.label = d.points[max_index].label;
      x = -8.0 * static_cast<double>(repl.label) * d.points[max_index].features;
      if (max_norm > 0.0) x /= max_norm;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, q - 1);
      swap = pick(rng);
      repl = random_probe_point(rng, n, std::max(max_norm, 1e-12));
      const double spread = (t % 3 == 0) ? 4.0 : 1.0;
      for (int j = 0; j < n; ++j) x[j] = spread * normal(rng);
    }
    const double diff = (data_mean(x, swap, d.points[swap]) -
                         data_mean(x, swap, repl))
                            .norm();
    const double gap = diff - budget;
    if (gap > out.worst_gap) {
      out.worst_gap = gap;
      out.worst_index = swap;
    }
    if (gap > 0.0) out.holds = false;
  }
  (void)r;
  return out;
}

PrivacyReport build_privacy_report(const PrivacyParams& pp, double lambda_lo,
                                   const std::vector<std::size_t>& q,
                                   const std::vector<double>& deltas) {
  require(!q.empty(), "privacy report: need at least one agent");
  PrivacyReport report;
  report.params = pp;
  report.lambda_lo = lambda_lo;
  report.deltas = deltas;
  report.rows.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    AgentPrivacyRow row;
    row.agent_id = static_cast<std::uint32_t>(i);
    row.samples = q[i];
    row.eps_rdp = rdp_epsilon_agent(pp, lambda_lo, q[i]);
    row.eps_rdp_limit = rdp_epsilon_limit(pp, lambda_lo, q[i]);
    for (double delta : deltas) {
      row.eps_adp.push_back(rdp_to_adp(row.eps_rdp, pp.lambda_order, delta));
    }
    report.rows.push_back(std::move(row));
  }
  report.eps_rdp_worst = rdp_epsilon_worst(pp, lambda_lo, q);
  for (double delta : deltas) {
    report.eps_adp_worst.push_back(
        rdp_to_adp(report.eps_rdp_worst, pp.lambda_order, delta));
  }
  return report;
}

std::string privacy_report_csv(const PrivacyReport& report) {
  std::ostringstream out;
  out << "agent,samples,order,rounds,epochs,eps_rdp,eps_rdp_limit";
  for (double delta : report.deltas) {
    out << ",eps_adp_delta_" << format_sig6(delta);
  }
  out << "\n";
  auto emit_row = [&](const std::string& id, std::size_t samples,
                      double eps_rdp, double limit,
                      const std::vector<double>& eps_adp) {
    out << id << "," << samples << "," << format_sig6(report.params.lambda_order)
        << "," << report.params.rounds << "," << report.params.epochs << ","
        << format_sig6(eps_rdp) << "," << format_sig6(limit);
    for (double eps : eps_adp) out << "," << format_sig6(eps);
    out << "\n";
  };
  std::size_t q_min = 0;
  double worst_limit = 0.0;
  for (const auto& row : report.rows) {
    emit_row(std::to_string(row.agent_id), row.samples, row.eps_rdp,
             row.eps_rdp_limit, row.eps_adp);
    if (q_min == 0 || row.samples < q_min) {
      q_min = row.samples;
      worst_limit = row.eps_rdp_limit;
    }
  }
  emit_row("worst", q_min, report.eps_rdp_worst, worst_limit,
           report.eps_adp_worst);
  return out.str();
}

std::string privacy_report_json(const PrivacyReport& report) {
  nlohmann::json j;
  j["order"] = report.params.lambda_order;
  j["clip_bound"] = report.params.clip_bound;
  j["tau_sq"] = report.params.tau_sq;
  j["gamma"] = report.params.gamma;
  j["rounds"] = report.params.rounds;
  j["epochs"] = report.params.epochs;
  j["lambda_lo"] = report.lambda_lo;
  j["deltas"] = report.deltas;
  j["agents"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    j["agents"].push_back({{"agent", row.agent_id},
                           {"samples", row.samples},
                           {"eps_rdp", row.eps_rdp},
                           {"eps_rdp_limit", row.eps_rdp_limit},
                           {"eps_adp", row.eps_adp}});
  }
  j["worst"] = {{"eps_rdp", report.eps_rdp_worst},
                {"eps_adp", report.eps_adp_worst}};
  return j.dump(2);
}

}  // namespace fedplt
