#pragma once

#include "haps/numerics.hpp"

#include <vector>

namespace haps {

/// One right-hand side reduced onto a single BS block: with the block's
/// multiplier t, the block's squared norm is sum_i xi2_i / (lambda_i + rho t)^2.
struct MultiplierTerm {
  Eigen::VectorXd lambda;
  Eigen::VectorXd xi2;
  double rho = 1.0;
};

/// Schur-reduces Hermitian PSD `m` onto rows [offset, offset + size) for each
/// right-hand side and diagonalizes the reduced matrix once.
std::vector<MultiplierTerm> schur_terms(const ComplexMat& m, const std::vector<ComplexVec>& rhs,
                                        int offset, int size, double rho = 1.0);

/// Weighted usage sum_k rho_k * ||w_k,block(t)||^2.
double term_usage(const std::vector<MultiplierTerm>& terms, double t);

/// Smallest t >= 0 with term_usage(t) <= cap, to near machine precision.
/// Always returns a point on the feasible side.
double bisect_multiplier(const std::vector<MultiplierTerm>& terms, double cap);

}  // namespace haps
