#include "haps/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haps {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double hermitian_asymmetry(const ComplexMat& a) {
  const double scale = a.norm();
  if (scale == 0.0) return 0.0;
  return (a - a.adjoint()).norm() / scale;
}

}  // namespace

std::uint64_t stream_id(Stream base, std::uint64_t a, std::uint64_t b,
                        std::uint64_t c) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(base));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed) ^ splitmix64(stream + 0x2545f4914f6cdd1dULL)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

Complex Rng::complex_normal(double variance) {
  const double sd = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {sd * re, sd * im};
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

double noise_power(double psd_dbm_per_hz, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) {
    throw std::invalid_argument("noise_power: bandwidth must be positive");
  }
  return dbm_to_watts(psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz));
}

std::optional<ComplexVec> try_hermitian_solve(const ComplexMat& a,
                                              const ComplexVec& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) return std::nullopt;
  if (hermitian_asymmetry(a) > 1e-10) return std::nullopt;
  Eigen::LLT<ComplexMat> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  ComplexVec x = llt.solve(b);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

ComplexVec hermitian_solve(const ComplexMat& a, const ComplexVec& b) {
  if (a.rows() != a.cols()) {
    throw NumericalError("hermitian_solve: matrix is not square");
  }
  if (a.rows() != b.size()) {
    throw NumericalError("hermitian_solve: dimension mismatch");
  }
  if (hermitian_asymmetry(a) > 1e-10) {
    throw NumericalError("hermitian_solve: matrix is not Hermitian");
  }
  Eigen::LLT<ComplexMat> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("hermitian_solve: matrix is not positive definite");
  }
  return llt.solve(b);
}

}  // namespace haps

namespace haps {

ComplexMat psd_solve(const ComplexMat& a, const ComplexMat& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw NumericalError("psd_solve: shape mismatch");
  }
  if (a.rows() == 0) return ComplexMat(0, b.cols());
  Eigen::LLT<ComplexMat> llt(a);
  if (llt.info() == Eigen::Success) {
    const double scale = a.diagonal().real().cwiseAbs().maxCoeff();
    const auto& l = llt.matrixL();
    double min_diag = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.rows(); ++i) min_diag = std::min(min_diag, std::abs(l(i, i)));
    if (min_diag * min_diag > 1e-13 * scale) return llt.solve(b);
  }
  Eigen::SelfAdjointEigenSolver<ComplexMat> eig(a);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > 1e-12 * top) inv(i) = 1.0 / ev(i);
  }
  const ComplexMat& v = eig.eigenvectors();
  return v * (inv.cast<Complex>().asDiagonal() * (v.adjoint() * b));
}

}  // namespace haps
