#include "fedplt/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "fedplt/operators.hpp"

namespace fedplt {
namespace {

void check_mu(double rho, const ConvexityBounds& bounds) {
  require(rho > 0.0, "rate: rho must be > 0");
  require(bounds.valid(), "rate: valid convexity bounds are required");
}

std::string format_sig6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

double chi_gd(double gamma, double rho, const ConvexityBounds& bounds) {
  check_mu(rho, bounds);
  const double mu_lo = bounds.lambda_lo + 1.0 / rho;
  const double mu_hi = bounds.lambda_hi + 1.0 / rho;
  require(gamma > 0.0 && gamma < 2.0 / mu_hi,
          "chi_gd: step outside the contraction range");
  return std::max(std::abs(1.0 - gamma * mu_lo),
                  std::abs(1.0 - gamma * mu_hi));
}

double chi_agd(int epochs, double rho, const ConvexityBounds& bounds) {
  check_mu(rho, bounds);
  require(epochs >= 1, "chi_agd: epochs must be >= 1");
  const double mu_lo = bounds.lambda_lo + 1.0 / rho;
  const double mu_hi = bounds.lambda_hi + 1.0 / rho;
  const double kappa = mu_hi / mu_lo;
  const double base = 1.0 - 1.0 / std::sqrt(kappa);
  return (1.0 + kappa) * std::pow(base, epochs);
}

int min_contractive_epochs(double kappa) {
  require(kappa >= 1.0, "min epochs: condition number must be >= 1");
  const double base = 1.0 - 1.0 / std::sqrt(kappa);
  if (base == 0.0) return 1;  // perfectly conditioned: one step suffices
  const double threshold = std::log1p(kappa) / -std::log(base);
  return static_cast<int>(std::floor(threshold)) + 1;
}

Matrix2d build_S(double chi_pow, double zeta, double mu_lo) {
  require(chi_pow >= 0.0, "build_S: chi term must be >= 0");
  require(zeta >= 0.0, "build_S: zeta must be >= 0");
  require(mu_lo > 0.0, "build_S: mu_lo must be > 0");
  Matrix2d s;
  s << chi_pow, (1.0 + chi_pow) / mu_lo,  //
      2.0 * chi_pow, zeta + 2.0 * chi_pow / mu_lo;
  return s;
}

EigenPair eigenvalues_2x2(const Matrix2d& m) {
  const double t = m.trace();
  const double det = m.determinant();
  const double disc = t * t - 4.0 * det;
  EigenPair out;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    out.real = true;
    out.a = 0.5 * (t + root);
    out.b = 0.5 * (t - root);
  } else {
    out.real = false;
    out.a = std::sqrt(det);  // common modulus of the conjugate pair
    out.b = 0.5 * std::sqrt(-disc);
  }
  return out;
}

double spectral_radius_2x2(const Matrix2d& m) {
  const EigenPair e = eigenvalues_2x2(m);
  if (!e.real) return e.a;
  return std::max(std::abs(e.a), std::abs(e.b));
}

double spectral_norm_2x2(const Matrix2d& m) {
  const double f = m.squaredNorm();  // Frobenius norm squared
  const double det = m.determinant();
  const double disc = std::max(f * f - 4.0 * det * det, 0.0);
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

ContractionReport stability_check(double chi_pow, double zeta, double mu_lo,
                                  double p_lo) {
  ContractionReport report;
  report.chi_pow = chi_pow;
  report.zeta = zeta;
  report.mu_lo = mu_lo;
  report.S = build_S(chi_pow, zeta, mu_lo);
  report.spectral_radius = spectral_radius_2x2(report.S);
  report.spectral_norm = spectral_norm_2x2(report.S);
  report.sigma = sigma_rate(report.spectral_norm, p_lo);
  report.contraction_margin = (1.0 - zeta) * (1.0 - chi_pow);
  report.coupling_strength = 4.0 * chi_pow / mu_lo;
  report.margin_dominates =
      report.contraction_margin > report.coupling_strength;
  report.stable = report.spectral_radius < 1.0;
  report.certificate_gap = report.stable && report.spectral_norm >= 1.0;
  return report;
}

double sigma_rate(double s_norm, double p_lo) {
  require(s_norm >= 0.0, "sigma: spectral norm must be >= 0");
  require(p_lo > 0.0 && p_lo <= 1.0, "sigma: p_lo must lie in (0,1]");
  return std::sqrt(1.0 - p_lo + p_lo * s_norm * s_norm);
}

std::vector<double> error_bound_curve(double sigma, double nu, double p_lo,
                                      double p_hi, double initial_dist,
                                      int rounds) {
  require(sigma >= 0.0, "error bound: sigma must be >= 0");
  require(nu >= 0.0, "error bound: nu must be >= 0");
  require(p_lo > 0.0 && p_lo <= p_hi && p_hi <= 1.0,
          "error bound: need 0 < p_lo <= p_hi <= 1");
  require(initial_dist >= 0.0, "error bound: distance must be >= 0");
  require(rounds >= 0, "error bound: rounds must be >= 0");
  const double factor = std::sqrt(p_hi / p_lo);
  std::vector<double> curve(static_cast<std::size_t>(rounds) + 1);
  double pow_k = 1.0;
  for (int k = 0; k <= rounds; ++k) {
    const double partial =
        sigma == 1.0 ? static_cast<double>(k) : (1.0 - pow_k) / (1.0 - sigma);
    curve[static_cast<std::size_t>(k)] =
        factor * (pow_k * initial_dist + partial * nu);
    pow_k *= sigma;
  }
  return curve;
}

TuneResult tune_grid(const ConvexityBounds& bounds, const TuneGrid& grid) {
  require(bounds.valid(), "tune: valid convexity bounds are required");
  require(!grid.rho_values.empty(), "tune: empty rho grid");
  require(!grid.ne_values.empty(), "tune: empty epoch grid");
  require(grid.solver == SolverType::Gd || grid.solver == SolverType::Agd,
          "tune: only the gd and agd solvers have rate certificates");
  require(grid.p_lo > 0.0 && grid.p_lo <= 1.0,
          "tune: p_lo must lie in (0,1]");

  TuneResult result;
  for (double rho : grid.rho_values) {
    require(rho > 0.0, "tune: rho values must be > 0");
    const double zeta = prs_rate(rho, bounds);
    const double mu_lo = bounds.lambda_lo + 1.0 / rho;
    const double mu_hi = bounds.lambda_hi + 1.0 / rho;

    std::vector<double> gammas;
    if (grid.solver == SolverType::Gd) {
      if (grid.gamma_values.empty()) {
        gammas.push_back(2.0 / (mu_lo + mu_hi));  // rate-optimal step
      } else {
        gammas = grid.gamma_values;
      }
    } else {
      gammas.push_back(0.0);  // agd: fixed step rule, no gamma axis
    }

    for (double gamma : gammas) {
      for (int ne : grid.ne_values) {
        require(ne >= 1, "tune: epoch values must be >= 1");
        double chi_pow;
        if (grid.solver == SolverType::Gd) {
          if (!(gamma > 0.0 && gamma < 2.0 / mu_hi)) continue;  // off-range
          chi_pow = std::pow(chi_gd(gamma, rho, bounds), ne);
        } else {
          chi_pow = chi_agd(ne, rho, bounds);
        }
        TuneEntry entry;
        entry.rho = rho;
        entry.gamma = gamma;
        entry.epochs = ne;
        entry.report = stability_check(chi_pow, zeta, mu_lo, grid.p_lo);
        result.entries.push_back(std::move(entry));
      }
    }
  }

  bool found = false;
  auto rank = [](const TuneEntry& e) {
    return std::make_tuple(e.report.spectral_norm, e.epochs, e.rho, e.gamma);
  };
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    if (!result.entries[i].report.stable) continue;
    if (!found || rank(result.entries[i]) < rank(result.entries[result.best])) {
      result.best = i;
      found = true;
    }
  }
  if (!found) {
    throw NoStableTuning("tune: no grid point carries a stability certificate");
  }
  return result;
}

std::string tuning_table_csv(const TuneResult& result) {
  std::ostringstream out;
  out << "rho,gamma,epochs,chi_pow,zeta,spectral_radius,spectral_norm,sigma,"
         "contraction_margin,coupling_strength,margin_dominates,stable,"
         "certificate_gap,best\n";
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const auto& e = result.entries[i];
    const auto& r = e.report;
    out << format_sig6(e.rho) << "," << format_sig6(e.gamma) << "," << e.epochs
        << "," << format_sig6(r.chi_pow) << "," << format_sig6(r.zeta) << ","
        << format_sig6(r.spectral_radius) << ","
        << format_sig6(r.spectral_norm) << "," << format_sig6(r.sigma) << ","
        << format_sig6(r.contraction_margin) << ","
        << format_sig6(r.coupling_strength) << ","
        << (r.margin_dominates ? 1 : 0) << "," << (r.stable ? 1 : 0) << ","
        << (r.certificate_gap ? 1 : 0) << "," << (i == result.best ? 1 : 0)
        << "\n";
  }
  return out.str();
}

std::string tuning_table_json(const TuneResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < result.entries.size(); ++i) {
    const auto& e = result.entries[i];
    const auto& r = e.report;
    rows.push_back({{"rho", e.rho},
                    {"gamma", e.gamma},
                    {"epochs", e.epochs},
                    {"chi_pow", r.chi_pow},
                    {"zeta", r.zeta},
                    {"spectral_radius", r.spectral_radius},
                    {"spectral_norm", r.spectral_norm},
                    {"sigma", r.sigma},
                    {"contraction_margin", r.contraction_margin},
                    {"coupling_strength", r.coupling_strength},
                    {"margin_dominates", r.margin_dominates},
                    {"stable", r.stable},
                    {"certificate_gap", r.certificate_gap},
                    {"best", i == result.best}});
  }
  return rows.dump(2);
}

}  // namespace fedplt
