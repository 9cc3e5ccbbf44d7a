#pragma once

#include <vector>

#include "fedplt/common.hpp"
#include "fedplt/objective.hpp"
#include "fedplt/problem.hpp"

namespace fedplt {

/// prox_{penalty * h}(v): identity for h = Zero, coordinatewise soft
/// threshold at penalty * weight for h = L1.
Vector prox_h(const NonsmoothSpec& h, const Vector& v, double penalty);

/// Reflected resolvent 2 prox_{penalty*h}(v) - v.
Vector reflect_h(const NonsmoothSpec& h, const Vector& v, double penalty);

/// Coordinator update: the prox of the consensus-restricted nonsmooth term
/// collapses to prox_{(rho/N) h} applied to the average of the agents' z.
Vector consensus_prox(const std::vector<Vector>& z, const NonsmoothSpec& h,
                      double rho);

/// Peaceman-Rachford contraction factor over S(lambda_lo, lambda_hi):
/// max{ |1 - rho*lambda_hi| / (1 + rho*lambda_hi),
///      |1 - rho*lambda_lo| / (1 + rho*lambda_lo) }.
double prs_rate(double rho, const ConvexityBounds& bounds);

/// Fixed point of the splitting: x_star is the consensus minimizer of
/// sum_i f_i + h, z_star the per-agent splitting states.
struct PrsSolution {
  Vector x_star;
  std::vector<Vector> z_star;
  int iterations = 0;
  double residual = 0.0;  // last max per-agent z movement
};

struct PrsIterate {
  Vector y;
  std::vector<Vector> x;
  std::vector<Vector> z;
};

/// One exact Peaceman-Rachford round on the stacked consensus problem:
///   y   = consensus_prox(z)
///   x_i = prox_{rho f_i}(2y - z_i)   (inner solve to inner_tol)
///   z_i <- z_i + 2 (x_i - y).
/// x_warm seeds the inner solves (pass the previous x for bit-stable
/// trajectories).
PrsIterate prs_step(const ObjectiveList& objectives,
                    const ConvexityBounds& bounds, const NonsmoothSpec& h,
                    double rho, const std::vector<Vector>& z,
                    const std::vector<Vector>& x_warm, double inner_tol = 1e-12);

/// Iterates prs_step from z = 0 until the z update stalls below outer_tol;
/// throws NumericalError when the budget runs out first.
PrsSolution prs_reference_solve(const ObjectiveList& objectives,
                                const ConvexityBounds& bounds,
                                const NonsmoothSpec& h, double rho,
                                int max_iterations = 100000,
                                double inner_tol = 1e-13,
                                double outer_tol = 1e-11);

/// ProblemInstance front end with an in-memory cache keyed on
/// (problem_hash, rho) so repeated test lookups cost one solve.
PrsSolution prs_reference_solve(const ProblemInstance& p, double rho,
                                int max_iterations = 100000,
                                double inner_tol = 1e-13,
                                double outer_tol = 1e-11);

}  // namespace fedplt
