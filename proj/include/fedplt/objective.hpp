#pragma once

#include <memory>
#include <vector>

#include "fedplt/common.hpp"

namespace fedplt {

/// Strong-convexity / smoothness moduli (lambda_lo, lambda_hi) of a local
/// objective: lambda_lo * I <= Hessian <= lambda_hi * I wherever the Hessian
/// exists.  Valid means 0 < lambda_lo <= lambda_hi < infinity.
struct ConvexityBounds {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;

  bool valid() const {
    return lambda_lo > 0.0 && lambda_hi >= lambda_lo &&
           std::isfinite(lambda_hi);
  }
};

/// One agent's smooth objective f_i.  The solvers only ever touch this
/// interface, so test fixtures (quadratics) and the logistic production model
/// run through identical code paths.
///
/// The split between sample_gradient() and regularizer_gradient() exists for
/// the stochastic and clipped solvers: f_i(x) = (1/q) sum_j loss_j(x) + reg(x),
/// and only the data-loss terms are subsampled or clipped.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  virtual int dim() const = 0;
  virtual double loss(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  /// Number of data samples; 0 for objectives without a finite-sum structure
  /// (stochastic/clipped solvers refuse those).
  virtual std::size_t sample_count() const { return 0; }

  /// Gradient of the j-th per-sample loss alone (no regularizer, no 1/q).
  virtual Vector sample_gradient(const Vector& x, std::size_t j) const {
    (void)x;
    (void)j;
    throw std::invalid_argument("objective has no per-sample gradients");
  }

  /// Gradient of the additive regularizer term; zero when there is none.
  virtual Vector regularizer_gradient(const Vector& x) const {
    return Vector::Zero(x.size());
  }
};

/// f(x) = (1/2) sum_j weights[j] * (x[j] - center[j])^2.  The workhorse test
/// fixture: minimizer, prox, and moduli are all closed-form.
class QuadraticObjective final : public LocalObjective {
 public:
  QuadraticObjective(Vector center, Vector weights)
      : center_(std::move(center)), weights_(std::move(weights)) {
    require(center_.size() == weights_.size(),
            "quadratic objective: center/weights dimension mismatch");
    require(center_.size() > 0, "quadratic objective: empty dimension");
    require((weights_.array() > 0.0).all(),
            "quadratic objective: weights must be positive");
  }

  /// Isotropic convenience: f(x) = (weight/2) * ||x - center||^2.
  QuadraticObjective(Vector center, double weight)
      : QuadraticObjective(
            center, Vector::Constant(center.size(), weight)) {}

  int dim() const override { return static_cast<int>(center_.size()); }

  double loss(const Vector& x) const override {
    return 0.5 * (weights_.array() * (x - center_).array().square()).sum();
  }

  Vector gradient(const Vector& x) const override {
    return weights_.array() * (x - center_).array();
  }

  ConvexityBounds bounds() const {
    return {weights_.minCoeff(), weights_.maxCoeff()};
  }

  const Vector& center() const { return center_; }
  const Vector& weights() const { return weights_; }

 private:
  Vector center_;
  Vector weights_;
};

using ObjectiveList = std::vector<std::shared_ptr<const LocalObjective>>;

/// Scalar helper for the two-agent fixtures used throughout the tests:
/// f(x) = (weight/2) (x - center)^2 in dimension 1.
inline std::shared_ptr<const LocalObjective> scalar_quadratic(double center,
                                                              double weight = 1.0) {
  Vector c(1);
  c << center;
  return std::make_shared<QuadraticObjective>(c, weight);
}

}  // namespace fedplt
