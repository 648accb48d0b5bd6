#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace ppodice {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Error taxonomy. Everything derives from std::runtime_error so callers that
// only care about "something failed" can catch one type.

/// Malformed or out-of-range input to an operation.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (unknown keys, bad ranges, unknown env names).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested operation is not supported by the object (e.g. reparametrized
/// sampling from a categorical head).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed its own accuracy check, or produced non-finite
/// values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic seed for a sub-stream identified by (seed, a, b, c).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

/// Stream tags used by the trainer so that independent consumers of
/// randomness never share a generator.
enum class Stream : std::uint64_t {
  kInit = 1,
  kRollout = 2,
  kShuffle = 3,
  kDiscriminator = 4,
  kRegularizer = 5,
  kEvaluation = 6,
  kEnvironment = 7,
};

inline Rng stream_rng(std::uint64_t seed, Stream s, std::uint64_t i = 0, std::uint64_t j = 0) {
  return Rng(derive_seed(seed, static_cast<std::uint64_t>(s), i, j));
}

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

/// Index sampled from a discrete distribution given by nonnegative weights
/// summing to (approximately) one.
int sample_discrete(const double* probs, int n, Rng& rng);

bool all_finite(const Matrix& m);

}  // namespace ppodice
