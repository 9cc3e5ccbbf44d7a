#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedplt/common.hpp"
#include "fedplt/local_solvers.hpp"
#include "fedplt/objective.hpp"

namespace fedplt {

/// Raised when a tuning grid holds no point with a stability certificate;
/// the CLI maps it to its dedicated exit code.
class NoStableTuning : public std::runtime_error {
 public:
  explicit NoStableTuning(const std::string& what)
      : std::runtime_error(what) {}
};

/// Per-step contraction of gradient descent on the local proximal objective
/// (moduli lambda_lo + 1/rho, lambda_hi + 1/rho):
///   chi = max{ |1 - gamma (lambda_lo + 1/rho)|,
///              |1 - gamma (lambda_hi + 1/rho)| },
/// valid (and < 1) for gamma in (0, 2 / (lambda_hi + 1/rho)).
double chi_gd(double gamma, double rho, const ConvexityBounds& bounds);

/// Contraction of `epochs` accelerated steps on the same objective:
///   (1 + kappa) (1 - 1/sqrt(kappa))^epochs,
/// kappa = (lambda_hi + 1/rho) / (lambda_lo + 1/rho).  May exceed 1 for
/// small epoch counts.
double chi_agd(int epochs, double rho, const ConvexityBounds& bounds);

/// Smallest epoch count that makes chi_agd < 1.
int min_contractive_epochs(double kappa);

/// Per-round error-coupling matrix of the inexact splitting round, acting on
/// (||x - x_star||, ||z - z_star||):
///   [ chi_pow            (1 + chi_pow) / mu_lo          ]
///   [ 2 chi_pow          zeta + 2 chi_pow / mu_lo       ]
/// with chi_pow the inner-solver contraction over one round's epochs, zeta
/// the exact-splitting rate, and mu_lo = lambda_lo + 1/rho.
Matrix2d build_S(double chi_pow, double zeta, double mu_lo);

struct EigenPair {
  bool real = true;
  double a = 0.0;  // real: the two eigenvalues; complex: common modulus in a
  double b = 0.0;
};

EigenPair eigenvalues_2x2(const Matrix2d& m);
double spectral_radius_2x2(const Matrix2d& m);
double spectral_norm_2x2(const Matrix2d& m);

/// Stability certificate for one (chi_pow, zeta, mu_lo) tuple.
///
/// contraction_margin = (1 - zeta)(1 - chi_pow) and coupling_strength =
/// 4 chi_pow / mu_lo are the two sides of the closed-form stability test for
/// build_S: the spectral radius is below 1 exactly when the margin exceeds
/// the coupling (margin_dominates).  stable is computed independently from
/// the closed-form eigenvalues; the tuner certifies by stable alone.
struct ContractionReport {
  double chi_pow = 0.0;
  double zeta = 0.0;
  double mu_lo = 0.0;
  Matrix2d S = Matrix2d::Zero();
  double spectral_radius = 0.0;
  double spectral_norm = 0.0;
  double sigma = 0.0;  // participation-adjusted rate at the context's p_lo
  double nu = 0.0;     // additive per-round error; 0 for exact/deterministic
  double contraction_margin = 0.0;
  double coupling_strength = 0.0;
  bool margin_dominates = false;
  bool stable = false;
  bool certificate_gap = false;  // stable but spectral_norm >= 1
};

ContractionReport stability_check(double chi_pow, double zeta, double mu_lo,
                                  double p_lo = 1.0);

/// Participation-adjusted contraction: sqrt(1 - p_lo + p_lo * s_norm^2) for
/// the smallest activation probability p_lo in (0, 1].
double sigma_rate(double s_norm, double p_lo);

/// Expected-distance envelope after k = 0..rounds rounds:
///   sqrt(p_hi / p_lo) * (sigma^k d0 + (1 - sigma^k) / (1 - sigma) * nu).
std::vector<double> error_bound_curve(double sigma, double nu, double p_lo,
                                      double p_hi, double initial_dist,
                                      int rounds);

/// Tuning grid.  gamma_values applies to the Gd solver only (empty means the
/// rate-optimal step for each rho); the Agd solver has a fixed step rule.
struct TuneGrid {
  std::vector<double> rho_values;
  std::vector<double> gamma_values;
  std::vector<int> ne_values;
  double p_lo = 1.0;
  SolverType solver = SolverType::Gd;
};

struct TuneEntry {
  double rho = 0.0;
  double gamma = 0.0;  // 0 for the Agd solver (fixed step rule)
  int epochs = 0;
  ContractionReport report;
};

struct TuneResult {
  std::vector<TuneEntry> entries;  // evaluable grid points, grid order
  std::size_t best = 0;            // index of the certified minimizer
};

/// Exhaustive certificate search: evaluates every grid point (skipping Gd
/// steps outside their contraction range), keeps only spectral_radius < 1 as
/// candidates, and returns the one minimizing the spectral norm with ties
/// broken toward smaller epochs, then smaller rho, then smaller gamma.
/// Throws NoStableTuning when no point is certified.
TuneResult tune_grid(const ConvexityBounds& bounds, const TuneGrid& grid);

/// One row per evaluated grid point:
/// rho, gamma, epochs, chi_pow, zeta, radius, norm, sigma, margin flags.
std::string tuning_table_csv(const TuneResult& result);
std::string tuning_table_json(const TuneResult& result);

}  // namespace fedplt
