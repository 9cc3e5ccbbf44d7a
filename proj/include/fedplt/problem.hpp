#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedplt/common.hpp"
#include "fedplt/objective.hpp"

namespace fedplt {

struct DataPoint {
  Vector features;  // one row a of the design matrix
  int label = 1;    // +1 or -1
};

struct LocalDataset {
  std::uint32_t agent_id = 0;
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
};

enum class RegularizerKind { L2, Nonconvex };

/// weight * r(x) added to every agent's data loss.  L2 is r(x) = ||x||^2 / 2;
/// Nonconvex is the bounded penalty r(x) = sum_j x_j^2 / (1 + x_j^2), kept for
/// empirical runs only (no convexity certificate exists for it).
struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::L2;
  double weight = 0.0;
};

enum class NonsmoothKind { Zero, L1 };

/// The shared nonsmooth term h applied at the coordinator; weight is the l1
/// coefficient (ignored for Zero).
struct NonsmoothSpec {
  NonsmoothKind kind = NonsmoothKind::Zero;
  double weight = 0.0;
};

struct ProblemInstance {
  std::vector<LocalDataset> datasets;
  RegularizerSpec regularizer;
  NonsmoothSpec nonsmooth;
  ConvexityBounds bounds;  // invalid (zeros) when no certificate exists
  int n = 0;               // model dimension
  std::uint64_t seed = 0;  // generation seed; 0 for hand-built instances

  std::size_t num_agents() const { return datasets.size(); }
};

/// Knobs of the synthetic logistic generator.  Features are i.i.d. normal
/// rows with per-coordinate deviation feature_scale / sqrt(dim); labels are
/// sign(a . x_true + noise) with a small flip probability, and any dataset
/// whose class balance leaves the 40-60% band is redrawn.
struct GenerateConfig {
  std::uint64_t seed = 1;
  std::uint32_t num_agents = 10;
  std::uint32_t dim = 5;
  std::uint32_t per_agent = 50;
  RegularizerSpec regularizer{RegularizerKind::L2, 0.5};
  NonsmoothSpec nonsmooth{NonsmoothKind::Zero, 0.0};
  double feature_scale = 4.0;
  double label_noise_sd = 0.1;
  double label_flip_prob = 0.05;
};

/// Deterministic synthetic problem: same config -> bit-identical instance.
/// Convexity bounds are filled in for the L2 regularizer and left invalid
/// otherwise.
ProblemInstance generate_logistic_data(const GenerateConfig& cfg);

/// One fresh sample from the generator's feature distribution with a uniform
/// random label; used by the sensitivity probes to build neighboring datasets.
DataPoint random_probe_point(std::mt19937_64& rng, int dim,
                             double feature_scale);

double regularizer_value(const RegularizerSpec& r, const Vector& x);
Vector regularizer_grad(const RegularizerSpec& r, const Vector& x);

/// Average logistic loss over the dataset plus the regularizer:
/// (1/q) sum_h log(1 + exp(-b_h a_h . x)) + weight * r(x).
double local_loss(const Vector& x, const LocalDataset& d,
                  const RegularizerSpec& r);

Vector local_gradient(const Vector& x, const LocalDataset& d,
                      const RegularizerSpec& r);

/// Gradient of the h-th per-sample logistic loss alone (no 1/q, no
/// regularizer): -b * sigmoid(-b a.x) * a.
Vector logistic_sample_gradient(const Vector& x, const DataPoint& p);

/// (lambda_lo, lambda_hi) certificate for the L2-regularized instance:
/// lambda_lo = weight, lambda_hi = weight + max_i lambda_max(Gram_i) with
/// Gram_i = (1/(4 q_i)) sum_h a_h a_h^T (the 1/4 is the logistic curvature
/// cap).  Top eigenvalues come from power iteration run to 1e-10.
/// Throws std::invalid_argument for the nonconvex regularizer.
ConvexityBounds smoothness_bounds(const ProblemInstance& p);

/// || sum_i grad f_i(x) ||^2 over the smooth local objectives only (the
/// shared nonsmooth term is not included).
double global_gradient_norm_sq(const Vector& x, const ObjectiveList& objectives);
double global_gradient_norm_sq(const Vector& x, const ProblemInstance& p);

/// LocalObjective adapter over one agent's dataset.
class LogisticObjective final : public LocalObjective {
 public:
  LogisticObjective(const LocalDataset* d, RegularizerSpec r, int dim)
      : data_(d), reg_(r), dim_(dim) {}

  int dim() const override { return dim_; }
  double loss(const Vector& x) const override {
    return local_loss(x, *data_, reg_);
  }
  Vector gradient(const Vector& x) const override {
    return local_gradient(x, *data_, reg_);
  }
  std::size_t sample_count() const override { return data_->size(); }
  Vector sample_gradient(const Vector& x, std::size_t j) const override;
  Vector regularizer_gradient(const Vector& x) const override {
    return regularizer_grad(reg_, x);
  }

 private:
  const LocalDataset* data_;
  RegularizerSpec reg_;
  int dim_;
};

/// Objective views over a problem instance.  The instance must outlive the
/// returned list.
ObjectiveList make_objectives(const ProblemInstance& p);

/// Binary serialization.  The byte stream is self-describing (magic, version,
/// sizes, generator seed, regularizer and nonsmooth specs, bounds) followed by
/// raw little-endian feature/label records; doubles are stored bit-exactly so
/// save -> load is an identity.
void serialize_problem(const ProblemInstance& p, std::ostream& out);
ProblemInstance deserialize_problem(std::istream& in);
void save_problem(const ProblemInstance& p, const std::string& path);
ProblemInstance load_problem(const std::string& path);

/// FNV-1a over the serialized bytes; keyed caches use (hash, rho).
std::uint64_t problem_hash(const ProblemInstance& p);

}  // namespace fedplt
