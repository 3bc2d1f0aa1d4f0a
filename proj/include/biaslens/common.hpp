// Shared infrastructure: error codes, deterministic RNG, hashing, small utilities.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace biaslens {

inline constexpr const char* kToolName = "biaslens";
inline constexpr const char* kToolVersion = "0.1.0";

enum class ErrorCode {
  ParseError,
  SchemaMismatch,
  DuplicateId,
  DimensionMismatch,
  NonPositiveTruth,
  EmptyGroup,
  OrderViolation,
  NonPositiveBaseline,
  DegenerateData,
  InsufficientRows,
  TooFewPoints,
  SingularComponent,
  SingleCluster,
  UnknownFactor,
  UnknownModel,
  UnknownSlice,
  UnknownBin,
  BinningMismatch,
  TooFewValues,
  EmptySample,
  InsufficientSupport,
  TooFewStrata,
  NoEmbeddings,
  OutOfRange,
  GaOutOfRange,
  GaOrderViolation,
  InvalidConfig,
  MismatchedProvenance,
  EmptyAxes,
  EmptyGrid,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// SplitMix64 step; also used to derive sub-stream seeds.
uint64_t splitmix64(uint64_t x);

// Seed for a derived stream. `salt` distinguishes streams of the same base seed.
inline uint64_t mix_seed(uint64_t base, uint64_t salt) {
  return splitmix64(base + 0x9E3779B97F4A7C15ULL * (salt + 1));
}

// Deterministic random source. The raw stream is std::mt19937_64 (bit-exact across
// conforming platforms); all transforms are implemented here rather than with
// std:: distributions, whose outputs are not portable.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller. Consumes exactly two uniforms per call; no
  // second-value cache, so the draw count per call is fixed.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform index in [0, n).
  size_t index(size_t n) {
    const size_t i = static_cast<size_t>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 gen_;
};

// Thread cap from BIASLENS_THREADS (>=1); defaults to hardware concurrency.
int thread_cap();

// Runs fn(i) for i in [0, n). Items are distributed over at most thread_cap()
// workers; each item writes only its own outputs, so results are identical to a
// serial run. The first exception thrown by any item is rethrown.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace biaslens
