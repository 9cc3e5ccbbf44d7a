#include "fedplt/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace fedplt {
namespace {

// log(1 + exp(-m)) without overflow for large |m|.
double softplus_neg(double m) {
  if (m >= 0.0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

// sigmoid(-m) = 1 / (1 + exp(m)) without overflow.
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

// Counts an acceptable class balance.  The 40-60% band is used whenever some
// integer count falls inside it; for tiny datasets (q in {1, 3}) where the
// band is empty we accept the most balanced counts |2*pos - q| <= 1 instead.
bool balance_ok(std::size_t positives, std::size_t q) {
  const std::size_t lo =
      static_cast<std::size_t>(std::ceil(0.4 * static_cast<double>(q)));
  const std::size_t hi =
      static_cast<std::size_t>(std::floor(0.6 * static_cast<double>(q)));
  if (lo <= hi) return positives >= lo && positives <= hi;
  const double drift = std::abs(2.0 * static_cast<double>(positives) -
                                static_cast<double>(q));
  return drift <= 1.0;
}

LocalDataset draw_dataset(const GenerateConfig& cfg, const Vector& x_true,
                          std::uint32_t agent) {
  const double sd = cfg.feature_scale / std::sqrt(static_cast<double>(cfg.dim));
  for (std::uint32_t attempt = 0; attempt < 10000; ++attempt) {
    auto rng = make_rng(cfg.seed, {kStreamData, agent, attempt});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LocalDataset d;
    d.agent_id = agent;
    d.points.resize(cfg.per_agent);
    std::size_t positives = 0;
    for (auto& p : d.points) {
      p.features = Vector::NullaryExpr(
          cfg.dim, [&](Eigen::Index) { return sd * normal(rng); });
      const double margin =
          p.features.dot(x_true) + cfg.label_noise_sd * normal(rng);
      p.label = margin >= 0.0 ? 1 : -1;
      if (unif(rng) < cfg.label_flip_prob) p.label = -p.label;
      if (p.label > 0) ++positives;
    }
    if (balance_ok(positives, d.points.size())) return d;
  }
  throw std::runtime_error("dataset generation: balance band unreachable");
}

double top_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  // Deterministic start with a mild ramp so it is not orthogonal to the top
  // eigenvector of any matrix we realistically meet.
  Vector v = Vector::NullaryExpr(n, [n](Eigen::Index j) {
    return 1.0 + static_cast<double>(j) / static_cast<double>(n + 1);
  });
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200000; ++it) {
    Vector mv = m * v;
    const double norm = mv.norm();
    if (norm == 0.0) return 0.0;
    v = mv / norm;
    const double next = v.dot(m * v);
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("problem file: truncated stream");
  return value;
}

constexpr char kMagic[8] = {'F', 'E', 'D', 'P', 'L', 'T', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

ProblemInstance generate_logistic_data(const GenerateConfig& cfg) {
  require(cfg.num_agents >= 1, "generate: need at least one agent");
  require(cfg.dim >= 1, "generate: dimension must be >= 1");
  require(cfg.per_agent >= 1, "generate: per-agent sample count must be >= 1");
  require(cfg.regularizer.weight >= 0.0, "generate: regularizer weight < 0");
  require(cfg.nonsmooth.weight >= 0.0, "generate: nonsmooth weight < 0");
  require(cfg.feature_scale > 0.0, "generate: feature scale must be > 0");

  auto truth_rng = make_rng(cfg.seed, {kStreamData, 0xffffffffu});
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x_true = Vector::NullaryExpr(
      cfg.dim, [&](Eigen::Index) { return normal(truth_rng); });

  ProblemInstance p;
  p.n = static_cast<int>(cfg.dim);
  p.seed = cfg.seed;
  p.regularizer = cfg.regularizer;
  p.nonsmooth = cfg.nonsmooth;
  p.datasets.reserve(cfg.num_agents);
  for (std::uint32_t i = 0; i < cfg.num_agents; ++i) {
    p.datasets.push_back(draw_dataset(cfg, x_true, i));
  }
  if (p.regularizer.kind == RegularizerKind::L2) {
    p.bounds = smoothness_bounds(p);
  }
  return p;
}

DataPoint random_probe_point(std::mt19937_64& rng, int dim,
                             double feature_scale) {
  require(dim >= 1, "probe point: dimension must be >= 1");
  const double sd = feature_scale / std::sqrt(static_cast<double>(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  DataPoint p;
  p.features =
      Vector::NullaryExpr(dim, [&](Eigen::Index) { return sd * normal(rng); });
  p.label = (rng() & 1u) ? 1 : -1;
  return p;
}

double regularizer_value(const RegularizerSpec& r, const Vector& x) {
  switch (r.kind) {
    case RegularizerKind::L2:
      return r.weight * 0.5 * x.squaredNorm();
    case RegularizerKind::Nonconvex:
      return r.weight *
             (x.array().square() / (1.0 + x.array().square())).sum();
  }
  throw std::invalid_argument("regularizer: unknown kind");
}

Vector regularizer_grad(const RegularizerSpec& r, const Vector& x) {
  switch (r.kind) {
    case RegularizerKind::L2:
      return r.weight * x;
    case RegularizerKind::Nonconvex: {
      // d/dx [x^2 / (1+x^2)] = 2x / (1+x^2)^2
      Eigen::ArrayXd denom = (1.0 + x.array().square()).square();
      return (r.weight * 2.0 * x.array() / denom).matrix();
    }
  }
  throw std::invalid_argument("regularizer: unknown kind");
}

double local_loss(const Vector& x, const LocalDataset& d,
                  const RegularizerSpec& r) {
  require(!d.points.empty(), "local loss: empty dataset");
  double acc = 0.0;
  for (const auto& p : d.points) {
    require(p.features.size() == x.size(),
            "local loss: feature/model dimension mismatch");
    acc += softplus_neg(static_cast<double>(p.label) * p.features.dot(x));
  }
  return acc / static_cast<double>(d.points.size()) +
         regularizer_value(r, x);
}

Vector logistic_sample_gradient(const Vector& x, const DataPoint& p) {
  require(p.features.size() == x.size(),
          "sample gradient: feature/model dimension mismatch");
  const double b = static_cast<double>(p.label);
  const double m = b * p.features.dot(x);
  return (-b * sigmoid_neg(m)) * p.features;
}

Vector local_gradient(const Vector& x, const LocalDataset& d,
                      const RegularizerSpec& r) {
  require(!d.points.empty(), "local gradient: empty dataset");
  Vector g = Vector::Zero(x.size());
  for (const auto& p : d.points) g += logistic_sample_gradient(x, p);
  g /= static_cast<double>(d.points.size());
  return g + regularizer_grad(r, x);
}

Vector LogisticObjective::sample_gradient(const Vector& x,
                                          std::size_t j) const {
  require(j < data_->size(), "sample gradient: index out of range");
  return logistic_sample_gradient(x, data_->points[j]);
}

ConvexityBounds smoothness_bounds(const ProblemInstance& p) {
  require(p.regularizer.kind == RegularizerKind::L2,
          "smoothness bounds: only the l2 regularizer has a certificate");
  require(!p.datasets.empty(), "smoothness bounds: no datasets");
  double worst = 0.0;
  for (const auto& d : p.datasets) {
    require(!d.points.empty(), "smoothness bounds: empty dataset");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p.n, p.n);
    for (const auto& pt : d.points) {
      require(pt.features.size() == p.n,
              "smoothness bounds: feature dimension mismatch");
      gram.noalias() += pt.features * pt.features.transpose();
    }
    gram /= 4.0 * static_cast<double>(d.points.size());
    worst = std::max(worst, top_eigenvalue(gram));
  }
  return {p.regularizer.weight, p.regularizer.weight + worst};
}

double global_gradient_norm_sq(const Vector& x,
                               const ObjectiveList& objectives) {
  require(!objectives.empty(), "global gradient: no objectives");
  Vector g = Vector::Zero(x.size());
  for (const auto& obj : objectives) g += obj->gradient(x);
  return g.squaredNorm();
}

double global_gradient_norm_sq(const Vector& x, const ProblemInstance& p) {
  Vector g = Vector::Zero(x.size());
  for (const auto& d : p.datasets) g += local_gradient(x, d, p.regularizer);
  return g.squaredNorm();
}

ObjectiveList make_objectives(const ProblemInstance& p) {
  ObjectiveList list;
  list.reserve(p.datasets.size());
  for (const auto& d : p.datasets) {
    list.push_back(
        std::make_shared<LogisticObjective>(&d, p.regularizer, p.n));
  }
  return list;
}

void serialize_problem(const ProblemInstance& p, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put(out, kFormatVersion);
  put(out, p.seed);
  put(out, static_cast<std::uint32_t>(p.datasets.size()));
  put(out, static_cast<std::uint32_t>(p.n));
  for (const auto& d : p.datasets) {
    put(out, static_cast<std::uint32_t>(d.points.size()));
  }
  put(out, static_cast<std::uint8_t>(p.regularizer.kind));
  put(out, p.regularizer.weight);
  put(out, static_cast<std::uint8_t>(p.nonsmooth.kind));
  put(out, p.nonsmooth.weight);
  put(out, p.bounds.lambda_lo);
  put(out, p.bounds.lambda_hi);
  for (const auto& d : p.datasets) {
    put(out, d.agent_id);
    for (const auto& pt : d.points) {
      out.write(reinterpret_cast<const char*>(pt.features.data()),
                static_cast<std::streamsize>(sizeof(double)) * p.n);
      put(out, static_cast<std::int8_t>(pt.label));
    }
  }
  if (!out) throw std::runtime_error("problem file: write failed");
}

ProblemInstance deserialize_problem(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) {
    throw std::runtime_error("problem file: bad magic");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw std::runtime_error("problem file: unsupported version " +
                             std::to_string(version));
  }
  ProblemInstance p;
  p.seed = get<std::uint64_t>(in);
  const auto num_agents = get<std::uint32_t>(in);
  p.n = static_cast<int>(get<std::uint32_t>(in));
  if (num_agents == 0 || p.n <= 0) {
    throw std::runtime_error("problem file: corrupt header");
  }
  std::vector<std::uint32_t> counts(num_agents);
  for (auto& q : counts) {
    q = get<std::uint32_t>(in);
    if (q == 0) throw std::runtime_error("problem file: empty dataset");
  }
  p.regularizer.kind = static_cast<RegularizerKind>(get<std::uint8_t>(in));
  p.regularizer.weight = get<double>(in);
  p.nonsmooth.kind = static_cast<NonsmoothKind>(get<std::uint8_t>(in));
  p.nonsmooth.weight = get<double>(in);
  p.bounds.lambda_lo = get<double>(in);
  p.bounds.lambda_hi = get<double>(in);
  p.datasets.resize(num_agents);
  for (std::uint32_t i = 0; i < num_agents; ++i) {
    auto& d = p.datasets[i];
    d.agent_id = get<std::uint32_t>(in);
    d.points.resize(counts[i]);
    for (auto& pt : d.points) {
      pt.features.resize(p.n);
      in.read(reinterpret_cast<char*>(pt.features.data()),
              static_cast<std::streamsize>(sizeof(double)) * p.n);
      const auto label = get<std::int8_t>(in);
      if (label != 1 && label != -1) {
        throw std::runtime_error("problem file: label must be +-1");
      }
      pt.label = label;
    }
  }
  if (!in) throw std::runtime_error("problem file: truncated stream");
  return p;
}

void save_problem(const ProblemInstance& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  serialize_problem(p, out);
}

ProblemInstance load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  return deserialize_problem(in);
}

std::uint64_t problem_hash(const ProblemInstance& p) {
  std::ostringstream buf(std::ios::binary);
  serialize_problem(p, buf);
  const std::string bytes = buf.str();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64-bit
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace fedplt
