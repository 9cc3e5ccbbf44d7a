#include "fedplt/operators.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "fedplt/local_solvers.hpp"

namespace fedplt {
namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

void check_nonsmooth(const NonsmoothSpec& h, double penalty) {
  require(penalty > 0.0, "prox: penalty must be > 0");
  require(h.weight >= 0.0, "prox: nonsmooth weight must be >= 0");
}

}  // namespace

Vector prox_h(const NonsmoothSpec& h, const Vector& v, double penalty) {
  check_nonsmooth(h, penalty);
  switch (h.kind) {
    case NonsmoothKind::Zero:
      return v;
    case NonsmoothKind::L1: {
      const double t = penalty * h.weight;
      return v.unaryExpr([t](double c) { return soft_threshold(c, t); });
    }
  }
  throw std::invalid_argument("prox: unknown nonsmooth kind");
}

Vector reflect_h(const NonsmoothSpec& h, const Vector& v, double penalty) {
  return 2.0 * prox_h(h, v, penalty) - v;
}

Vector consensus_prox(const std::vector<Vector>& z, const NonsmoothSpec& h,
                      double rho) {
  require(!z.empty(), "consensus prox: no agent states");
  require(rho > 0.0, "consensus prox: rho must be > 0");
  Vector mean = Vector::Zero(z.front().size());
  for (const auto& zi : z) {
    require(zi.size() == mean.size(), "consensus prox: dimension mismatch");
    mean += zi;
  }
  mean /= static_cast<double>(z.size());
  return prox_h(h, mean, rho / static_cast<double>(z.size()));
}

double prs_rate(double rho, const ConvexityBounds& bounds) {
  require(rho > 0.0, "prs rate: rho must be > 0");
  require(bounds.valid(), "prs rate: valid convexity bounds are required");
  auto factor = [rho](double lambda) {
    return std::abs(1.0 - rho * lambda) / (1.0 + rho * lambda);
  };
  return std::max(factor(bounds.lambda_hi), factor(bounds.lambda_lo));
}

PrsIterate prs_step(const ObjectiveList& objectives,
                    const ConvexityBounds& bounds, const NonsmoothSpec& h,
                    double rho, const std::vector<Vector>& z,
                    const std::vector<Vector>& x_warm, double inner_tol) {
  require(!objectives.empty(), "prs step: no objectives");
  require(objectives.size() == z.size() && z.size() == x_warm.size(),
          "prs step: agent count mismatch");
  PrsIterate next;
  next.y = consensus_prox(z, h, rho);
  next.x.reserve(objectives.size());
  next.z.reserve(objectives.size());
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    Vector v = 2.0 * next.y - z[i];
    Vector xi = exact_prox(*objectives[i], v, rho, bounds, x_warm[i],
                           inner_tol);
    next.z.push_back(z[i] + 2.0 * (xi - next.y));
    next.x.push_back(std::move(xi));
  }
  return next;
}

PrsSolution prs_reference_solve(const ObjectiveList& objectives,
                                const ConvexityBounds& bounds,
                                const NonsmoothSpec& h, double rho,
                                int max_iterations, double inner_tol,
                                double outer_tol) {
  require(!objectives.empty(), "prs reference: no objectives");
  require(max_iterations >= 1, "prs reference: iteration budget must be >= 1");
  require(outer_tol > 0.0, "prs reference: outer tolerance must be > 0");
  const int n = objectives.front()->dim();
  std::vector<Vector> z(objectives.size(), Vector::Zero(n));
  std::vector<Vector> x(objectives.size(), Vector::Zero(n));
  for (int it = 1; it <= max_iterations; ++it) {
    PrsIterate next = prs_step(objectives, bounds, h, rho, z, x, inner_tol);
    double residual = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      residual = std::max(residual, (next.z[i] - z[i]).norm());
    }
    z = std::move(next.z);
    x = std::move(next.x);
    if (residual <= outer_tol) {
      PrsSolution sol;
      // At the fixed point the consensus view of z is the minimizer.
      sol.x_star = consensus_prox(z, h, rho);
      sol.z_star = std::move(z);
      sol.iterations = it;
      sol.residual = residual;
      return sol;
    }
  }
  throw NumericalError("prs reference: no convergence within budget");
}

PrsSolution prs_reference_solve(const ProblemInstance& p, double rho,
                                int max_iterations, double inner_tol,
                                double outer_tol) {
  require(p.bounds.valid(),
          "prs reference: problem instance lacks convexity bounds");
  static std::mutex cache_mutex;
  static std::map<std::pair<std::uint64_t, std::uint64_t>, PrsSolution> cache;

  std::uint64_t rho_bits;
  static_assert(sizeof(rho_bits) == sizeof(rho));
  std::memcpy(&rho_bits, &rho, sizeof(rho));
  const auto key = std::make_pair(problem_hash(p), rho_bits);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  ObjectiveList objectives = make_objectives(p);
  PrsSolution sol = prs_reference_solve(objectives, p.bounds, p.nonsmooth, rho,
                                        max_iterations, inner_tol, outer_tol);
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(key, sol);
  return sol;
}

}  // namespace fedplt
