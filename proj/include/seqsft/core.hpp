// seqsft: shared scalar aliases, error taxonomy, deterministic RNG, and a
// deterministic work scheduler. Everything downstream includes this first.
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace seqsft {

inline constexpr const char* kVersion = "0.1.0";

using Real = double;
using Complex = std::complex<double>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using VectorR = Vector<Real>;
using VectorC = Vector<Complex>;
using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixC = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Real kPi = 3.14159265358979323846264338327950288;

// Base error: every failure mode below is a named subclass so callers can
// catch by meaning rather than by parsing messages.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SEQSFT_DEFINE_ERROR(Name)                                  \
  struct Name : Error {                                            \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

SEQSFT_DEFINE_ERROR(ShapeMismatch);
SEQSFT_DEFINE_ERROR(DeadSymbol);
SEQSFT_DEFINE_ERROR(NotMixing);
SEQSFT_DEFINE_ERROR(BaseMismatch);
SEQSFT_DEFINE_ERROR(DepthOverflow);
SEQSFT_DEFINE_ERROR(IndexOutOfWindow);
SEQSFT_DEFINE_ERROR(NoConvergence);
SEQSFT_DEFINE_ERROR(GridTooCoarse);
SEQSFT_DEFINE_ERROR(Inadmissible);
SEQSFT_DEFINE_ERROR(NotIntegerValued);
SEQSFT_DEFINE_ERROR(RangeOverflow);
SEQSFT_DEFINE_ERROR(BadDensity);
SEQSFT_DEFINE_ERROR(DegenerateVariance);
SEQSFT_DEFINE_ERROR(SpanMismatch);
SEQSFT_DEFINE_ERROR(DecompositionInvalid);
SEQSFT_DEFINE_ERROR(NotStochastic);
SEQSFT_DEFINE_ERROR(NotElliptic);
SEQSFT_DEFINE_ERROR(NotPositive);
SEQSFT_DEFINE_ERROR(NotExpanding);
SEQSFT_DEFINE_ERROR(NotMarkov);
SEQSFT_DEFINE_ERROR(IncompatibleReferencePast);
SEQSFT_DEFINE_ERROR(NotLocallyConstant);
SEQSFT_DEFINE_ERROR(ConfigError);

#undef SEQSFT_DEFINE_ERROR

// Counter-based RNG: a SplitMix64-style finalizer over (seed, stream, step).
// Stateless, so sample i of stream s is the same number no matter how work
// is batched across threads or resumed across runs.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t bits(std::uint64_t step) const {
    std::uint64_t z = seed;
    z = mix64(z ^ mix64(stream));
    z = mix64(z ^ mix64(step));
    return z;
  }
  // Uniform in [0, 1), 53 random bits.
  double uniform(std::uint64_t step) const {
    return static_cast<double>(bits(step) >> 11) * 0x1.0p-53;
  }
};

// Deterministic parallel map: fixed chunking by index, each slot written
// exactly once, so results are independent of the thread count.
inline void parallel_for(std::int64_t count, int threads,
                         const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (threads <= 0) threads = hw > 8 ? 8 : hw;
  if (threads > count) threads = static_cast<int>(count);
  if (threads == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::int64_t i = t; i < count; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace seqsft
