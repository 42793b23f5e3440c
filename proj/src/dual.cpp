#include "haps/dual.hpp"

#include <cmath>
#include <limits>

namespace haps {

std::vector<MultiplierTerm> schur_terms(const ComplexMat& m, const std::vector<ComplexVec>& rhs,
                                        int offset, int size, double rho) {
  const int dim = static_cast<int>(m.rows());
  const int rest = dim - size;
  std::vector<int> idx;
  idx.reserve(rest);
  for (int i = 0; i < dim; ++i) {
    if (i < offset || i >= offset + size) idx.push_back(i);
  }
  const int k = static_cast<int>(rhs.size());
  ComplexMat s = m.block(offset, offset, size, size);
  ComplexMat r(size, k);
  for (int j = 0; j < k; ++j) r.col(j) = rhs[j].segment(offset, size);
  if (rest > 0) {
    ComplexMat mrr(rest, rest);
    ComplexMat mrb(rest, size);
    ComplexMat br(rest, k);
    for (int a = 0; a < rest; ++a) {
      for (int c = 0; c < rest; ++c) mrr(a, c) = m(idx[a], idx[c]);
      for (int c = 0; c < size; ++c) mrb(a, c) = m(idx[a], offset + c);
      for (int j = 0; j < k; ++j) br(a, j) = rhs[j](idx[a]);
    }
    ComplexMat rhs_all(rest, size + k);
    rhs_all << mrb, br;
    const ComplexMat x = psd_solve(mrr, rhs_all);
    s -= mrb.adjoint() * x.leftCols(size);
    r -= mrb.adjoint() * x.rightCols(k);
  }
  s = 0.5 * (s + s.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMat> eig(s);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double top = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= 1e-12 * top) lambda(i) = 0.0;
  }
  const ComplexMat xi = eig.eigenvectors().adjoint() * r;
  std::vector<MultiplierTerm> terms(k);
  for (int j = 0; j < k; ++j) {
    terms[j].lambda = lambda;
    terms[j].xi2 = xi.col(j).cwiseAbs2();
    terms[j].rho = rho;
    const double total = terms[j].xi2.sum();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (terms[j].xi2(i) <= 1e-24 * total) terms[j].xi2(i) = 0.0;
    }
  }
  return terms;
}

double term_usage(const std::vector<MultiplierTerm>& terms, double t) {
  double total = 0.0;
  for (const auto& term : terms) {
    for (Eigen::Index i = 0; i < term.lambda.size(); ++i) {
      if (term.xi2(i) == 0.0) continue;
      const double den = term.lambda(i) + term.rho * t;
      if (den <= 0.0) return std::numeric_limits<double>::infinity();
      total += term.rho * term.xi2(i) / (den * den);
    }
  }
  return total;
}

double bisect_multiplier(const std::vector<MultiplierTerm>& terms, double cap) {
  if (term_usage(terms, 0.0) <= cap) return 0.0;
  // usage(t) <= sum_k xi2_k / (rho_k t^2) gives a feasible upper end.
  double bound = 0.0;
  for (const auto& term : terms) bound += term.xi2.sum() / term.rho;
  double hi = std::sqrt(bound / cap);
  while (term_usage(terms, hi) > cap) hi *= 2.0;  // guards rounding only
  double lo = 0.0;
  for (int step = 0; step < 100 && hi - lo > 1e-15 * hi; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (term_usage(terms, mid) <= cap) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace haps
