#pragma once

#include <optional>

#include "fedplt/common.hpp"
#include "fedplt/objective.hpp"

namespace fedplt {

enum class SolverType { Gd, Agd, Sgd, NoisyGd, ExactProx };

/// Configuration for one agent-side inner solve of
///   d(w) = f_i(w) + ||w - v||^2 / (2 rho).
///
/// gamma == 0 asks for the rate-optimal constant step
/// 2 / (lambda_lo + lambda_hi + 2/rho), which requires valid bounds.  When
/// bounds are present, explicit steps are validated against the contraction
/// range (0, 2 / (lambda_hi + 1/rho)); without bounds (empirical runs on the
/// nonconvex regularizer) any positive step is accepted.
struct LocalSolveConfig {
  SolverType type = SolverType::Gd;
  int epochs = 1;     // Ne, number of local steps
  double rho = 1.0;   // proximal penalty of the outer splitting
  double gamma = 0.0; // step size; 0 = derive optimal from bounds
  int batch = 0;      // SGD minibatch size
  double tau_sq = 0.0;              // per-coordinate DP noise variance scale
  std::optional<double> clip;       // per-sample clip bound L (NoisyGd)
  std::optional<ConvexityBounds> bounds;
  double exact_tol = 1e-12;         // gradient-norm stop for ExactProx
};

/// grad d(w) = grad f(w) + (w - v) / rho.
Vector local_objective_gradient(const LocalObjective& obj, const Vector& w,
                                const Vector& v, double rho);

/// The effective step used by a config: cfg.gamma, or the rate-optimal step
/// when cfg.gamma == 0.
double resolve_step(const LocalSolveConfig& cfg);

/// Plain gradient descent on d: epochs steps of w <- w - gamma grad d(w).
Vector run_gd(const LocalObjective& obj, const Vector& x_start,
              const Vector& v, const LocalSolveConfig& cfg);

/// Nesterov-accelerated descent on d with the constant step
/// 1 / (lambda_hi + 1/rho) and momentum
/// (sqrt(lambda_hi + 1/rho) - sqrt(lambda_lo + 1/rho)) /
/// (sqrt(lambda_hi + 1/rho) + sqrt(lambda_lo + 1/rho)); both u and w start at
/// x_start and w after `epochs` steps is returned.
Vector run_agd(const LocalObjective& obj, const Vector& x_start,
               const Vector& v, const LocalSolveConfig& cfg);

/// Minibatch stochastic descent: the data-loss gradient is replaced by the
/// average of `batch` per-sample gradients drawn uniformly without
/// replacement each step; the regularizer and proximal terms stay exact.
Vector run_sgd(const LocalObjective& obj, const Vector& x_start,
               const Vector& v, const LocalSolveConfig& cfg,
               std::mt19937_64& rng);

/// Differentially private descent: each step adds Gaussian noise with
/// per-coordinate variance 2 * gamma * tau_sq after the gradient update.
/// With cfg.clip set, per-sample data gradients are clipped to norm clip/2
/// before averaging (full batch).
Vector run_noisy_gd(const LocalObjective& obj, const Vector& x_start,
                    const Vector& v, const LocalSolveConfig& cfg,
                    std::mt19937_64& rng);

/// High-accuracy minimizer of d (equivalently prox_{rho f}(v)): optimal-step
/// gradient descent from warm_start until ||grad d|| <= tol.  Ground truth
/// for every inexact solver above.
Vector exact_prox(const LocalObjective& obj, const Vector& v, double rho,
                  const ConvexityBounds& bounds, const Vector& warm_start,
                  double tol = 1e-12, int max_iter = 200000);

/// Dispatch on cfg.type.  rng is consumed only by the stochastic solvers.
Vector run_local_solver(const LocalObjective& obj, const Vector& x_start,
                        const Vector& v, const LocalSolveConfig& cfg,
                        std::mt19937_64& rng);

}  // namespace fedplt
