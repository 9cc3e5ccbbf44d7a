#include "fedplt/local_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedplt/privacy.hpp"

namespace fedplt {
namespace {

void check_common(const LocalSolveConfig& cfg, const LocalObjective& obj,
                  const Vector& x_start, const Vector& v) {
  require(cfg.rho > 0.0, "local solve: rho must be > 0");
  require(x_start.size() == obj.dim() && v.size() == obj.dim(),
          "local solve: dimension mismatch");
  if (cfg.type != SolverType::ExactProx) {
    require(cfg.epochs >= 1, "local solve: epochs must be >= 1");
  }
}

// Step validation for the descent-type solvers.  With a certificate the
// contraction range is (0, 2 / (lambda_hi + 1/rho)); without one we only
// insist on positivity.
double checked_step(const LocalSolveConfig& cfg) {
  const double gamma = resolve_step(cfg);
  require(gamma > 0.0, "local solve: step must be > 0");
  if (cfg.bounds && cfg.bounds->valid()) {
    const double cap = 2.0 / (cfg.bounds->lambda_hi + 1.0 / cfg.rho);
    require(gamma < cap, "local solve: step outside contraction range");
  }
  return gamma;
}

}  // namespace

Vector local_objective_gradient(const LocalObjective& obj, const Vector& w,
                                const Vector& v, double rho) {
  require(rho > 0.0, "local objective gradient: rho must be > 0");
  require(w.size() == obj.dim() && v.size() == obj.dim(),
          "local objective gradient: dimension mismatch");
  return obj.gradient(w) + (w - v) / rho;
}

double resolve_step(const LocalSolveConfig& cfg) {
  if (cfg.gamma != 0.0) return cfg.gamma;
  require(cfg.bounds.has_value() && cfg.bounds->valid(),
          "local solve: automatic step needs valid convexity bounds");
  return 2.0 / (cfg.bounds->lambda_lo + cfg.bounds->lambda_hi +
                2.0 / cfg.rho);
}

Vector run_gd(const LocalObjective& obj, const Vector& x_start,
              const Vector& v, const LocalSolveConfig& cfg) {
  check_common(cfg, obj, x_start, v);
  const double gamma = checked_step(cfg);
  Vector w = x_start;
  for (int l = 0; l < cfg.epochs; ++l) {
    w -= gamma * local_objective_gradient(obj, w, v, cfg.rho);
    require_finite(w, "gd: iterate left the finite range");
  }
  return w;
}

Vector run_agd(const LocalObjective& obj, const Vector& x_start,
               const Vector& v, const LocalSolveConfig& cfg) {
  check_common(cfg, obj, x_start, v);
  require(cfg.bounds.has_value() && cfg.bounds->valid(),
          "agd: valid convexity bounds are required");
  const double mu_lo = cfg.bounds->lambda_lo + 1.0 / cfg.rho;
  const double mu_hi = cfg.bounds->lambda_hi + 1.0 / cfg.rho;
  const double step = 1.0 / mu_hi;
  const double momentum = (std::sqrt(mu_hi) - std::sqrt(mu_lo)) /
                          (std::sqrt(mu_hi) + std::sqrt(mu_lo));
  Vector w = x_start;
  Vector u = x_start;
  for (int l = 0; l < cfg.epochs; ++l) {
    Vector u_next = w - step * local_objective_gradient(obj, w, v, cfg.rho);
    w = u_next + momentum * (u_next - u);
    u = std::move(u_next);
    require_finite(w, "agd: iterate left the finite range");
  }
  return w;
}

Vector run_sgd(const LocalObjective& obj, const Vector& x_start,
               const Vector& v, const LocalSolveConfig& cfg,
               std::mt19937_64& rng) {
  check_common(cfg, obj, x_start, v);
  const double gamma = checked_step(cfg);
  const std::size_t q = obj.sample_count();
  require(q > 0, "sgd: objective has no per-sample structure");
  require(cfg.batch >= 1 && static_cast<std::size_t>(cfg.batch) <= q,
          "sgd: batch size must lie in [1, sample count]");
  const auto batch = static_cast<std::size_t>(cfg.batch);

  std::vector<std::size_t> indices(q);
  std::iota(indices.begin(), indices.end(), std::size_t{0});

  Vector w = x_start;
  for (int l = 0; l < cfg.epochs; ++l) {
    // Partial Fisher-Yates: the first `batch` entries become a uniform draw
    // without replacement.
    for (std::size_t j = 0; j < batch; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, q - 1);
      std::swap(indices[j], indices[pick(rng)]);
    }
    Vector g = Vector::Zero(obj.dim());
    for (std::size_t j = 0; j < batch; ++j) {
      g += obj.sample_gradient(w, indices[j]);
    }
    g /= static_cast<double>(batch);
    g += obj.regularizer_gradient(w) + (w - v) / cfg.rho;
    w -= gamma * g;
    require_finite(w, "sgd: iterate left the finite range");
  }
  return w;
}

Vector run_noisy_gd(const LocalObjective& obj, const Vector& x_start,
                    const Vector& v, const LocalSolveConfig& cfg,
                    std::mt19937_64& rng) {
  check_common(cfg, obj, x_start, v);
  const double gamma = checked_step(cfg);
  require(cfg.tau_sq >= 0.0, "noisy gd: tau^2 must be >= 0");
  if (cfg.clip) {
    require(*cfg.clip > 0.0, "noisy gd: clip bound must be > 0");
    require(obj.sample_count() > 0,
            "noisy gd: clipping needs per-sample gradients");
  }
  const double noise_sd = std::sqrt(2.0 * gamma * cfg.tau_sq);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector w = x_start;
  for (int l = 0; l < cfg.epochs; ++l) {
    Vector g;
    if (cfg.clip) {
      const std::size_t q = obj.sample_count();
      g = Vector::Zero(obj.dim());
      for (std::size_t j = 0; j < q; ++j) {
        g += clip_gradient(obj.sample_gradient(w, j), *cfg.clip);
      }
      g /= static_cast<double>(q);
      g += obj.regularizer_gradient(w) + (w - v) / cfg.rho;
    } else {
      g = local_objective_gradient(obj, w, v, cfg.rho);
    }
    w -= gamma * g;
    if (noise_sd > 0.0) {
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        w[j] += noise_sd * normal(rng);
      }
    }
    require_finite(w, "noisy gd: iterate left the finite range");
  }
  return w;
}

Vector exact_prox(const LocalObjective& obj, const Vector& v, double rho,
                  const ConvexityBounds& bounds, const Vector& warm_start,
                  double tol, int max_iter) {
  require(rho > 0.0, "exact prox: rho must be > 0");
  require(bounds.valid(), "exact prox: valid convexity bounds are required");
  require(tol > 0.0, "exact prox: tolerance must be > 0");
  require(v.size() == obj.dim() && warm_start.size() == obj.dim(),
          "exact prox: dimension mismatch");
  const double step =
      2.0 / (bounds.lambda_lo + bounds.lambda_hi + 2.0 / rho);
  Vector w = warm_start;
  for (int it = 0; it < max_iter; ++it) {
    Vector g = local_objective_gradient(obj, w, v, rho);
    if (g.norm() <= tol) return w;
    w -= step * g;
    require_finite(w, "exact prox: iterate left the finite range");
  }
  throw NumericalError("exact prox: did not reach tolerance " +
                       std::to_string(tol));
}

Vector run_local_solver(const LocalObjective& obj, const Vector& x_start,
                        const Vector& v, const LocalSolveConfig& cfg,
                        std::mt19937_64& rng) {
  switch (cfg.type) {
    case SolverType::Gd:
      return run_gd(obj, x_start, v, cfg);
    case SolverType::Agd:
      return run_agd(obj, x_start, v, cfg);
    case SolverType::Sgd:
      return run_sgd(obj, x_start, v, cfg, rng);
    case SolverType::NoisyGd:
      return run_noisy_gd(obj, x_start, v, cfg, rng);
    case SolverType::ExactProx:
      require(cfg.bounds.has_value(),
              "exact prox: convexity bounds are required");
      return exact_prox(obj, v, cfg.rho, *cfg.bounds, x_start,
                        cfg.exact_tol);
  }
  throw std::invalid_argument("local solve: unknown solver type");
}

}  // namespace fedplt
