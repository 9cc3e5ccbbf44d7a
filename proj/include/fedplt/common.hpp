#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace fedplt {

inline constexpr const char* kArtifactVersion = "0.1.0";

using Vector = Eigen::VectorXd;
using Matrix2d = Eigen::Matrix2d;

/// Thrown when an iterate or accumulator leaves the finite range.  The CLI
/// maps this to its "numerical abort" exit code; everything else surfaces as
/// std::invalid_argument (bad call contract) or std::runtime_error (I/O).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic RNG stream derived from a master seed plus a tag path
/// (e.g. {kStreamSolver, agent, round}).  Streams with distinct paths are
/// independent for practical purposes, and a stream's draws never depend on
/// how many draws other streams consumed — this is what keeps partial
/// participation runs reproducible agent-by-agent.
inline std::mt19937_64 make_rng(std::uint64_t master_seed,
                                std::initializer_list<std::uint32_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + path.size());
  words.push_back(static_cast<std::uint32_t>(master_seed & 0xffffffffu));
  words.push_back(static_cast<std::uint32_t>(master_seed >> 32));
  for (std::uint32_t w : path) words.push_back(w);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// Stream tags.  One tag per purpose so that adding draws to one consumer can
// never shift the values another consumer sees.
inline constexpr std::uint32_t kStreamData = 1;           // dataset generation
inline constexpr std::uint32_t kStreamInit = 2;           // private initialization
inline constexpr std::uint32_t kStreamParticipation = 3;  // active-set sampling
inline constexpr std::uint32_t kStreamSolver = 4;         // SGD batches / DP noise
inline constexpr std::uint32_t kStreamCheck = 5;          // sensitivity probes

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void require_finite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) throw NumericalError(what);
}

inline void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw NumericalError(what);
}

}  // namespace fedplt
