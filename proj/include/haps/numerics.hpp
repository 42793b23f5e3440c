#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

namespace haps {

using Complex = std::complex<double>;
using ComplexVec = Eigen::VectorXcd;
using ComplexMat = Eigen::MatrixXcd;

/// Raised when a linear-algebra precondition fails (non-Hermitian or
/// non-positive-definite input, non-bracketing bisection, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stochastic subsystems. Each one draws from its own stream so that changing
/// one model never shifts the draws of another.
enum class Stream : std::uint64_t {
  kPlacement = 1,
  kShadowing = 2,
  kFading = 3,
  kToneFading = 4,
  kScratch = 99,
};

/// Mixes a tuple of integers into a single stream id.
std::uint64_t stream_id(Stream base, std::uint64_t a = 0, std::uint64_t b = 0,
                        std::uint64_t c = 0);

/// Seeded generator. The engine is std::mt19937_64 (fully specified by the
/// standard); uniform and normal transforms are implemented here because the
/// std distributions are implementation-defined.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  Rng(std::uint64_t seed, Stream stream)
      : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// CN(0, variance): independent real/imag parts with variance/2 each.
  Complex complex_normal(double variance = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);
double linear_to_db(double ratio);

/// Thermal noise power in watts for a PSD in dBm/Hz over `bandwidth_hz`.
double noise_power(double psd_dbm_per_hz, double bandwidth_hz);

/// Solves A x = b for Hermitian positive definite A (Cholesky).
/// Throws NumericalError if A is not square, not Hermitian within 1e-10
/// (relative), or not positive definite.
ComplexVec hermitian_solve(const ComplexMat& a, const ComplexVec& b);

/// Same as hermitian_solve but reports failure as std::nullopt.
std::optional<ComplexVec> try_hermitian_solve(const ComplexMat& a,
                                              const ComplexVec& b);

/// Solves A X = B for Hermitian positive semidefinite A. Uses Cholesky when
/// possible and falls back to the eigen pseudo-inverse (eigenvalues below
/// 1e-12 of the largest are dropped), giving the minimum-norm solution.
ComplexMat psd_solve(const ComplexMat& a, const ComplexMat& b);

}  // namespace haps
