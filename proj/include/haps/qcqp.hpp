#pragma once

#include "haps/numerics.hpp"
#include "haps/scenario.hpp"

#include "json.hpp"

#include <vector>

namespace haps {

/// One beamformer to optimize: maximize 2 Re{reward^H w} - w^H A w, where A
/// is forms[form]. rho holds the fronthaul weight (frozen rate times beta) of
/// each BS block of the cluster layout.
struct BeamVar {
  int cluster = 0;
  int tone = 0;
  int user = 0;
  int form = 0;
  ComplexVec reward;
  std::vector<double> rho;
};

/// Concave quadratic objective summed over vars, subject to per-BS power
/// sum ||w_b||^2 <= P_b and fronthaul sum rho ||w_b||^2 <= C_b over all vars
/// (all tones) touching BS b. An infinite cap disables the constraint.
struct BeamProblem {
  std::vector<ClusterLayout> layouts;  // indexed by cluster id
  std::vector<ComplexMat> forms;
  std::vector<BeamVar> vars;
  std::vector<double> power_cap;      // per BS
  std::vector<double> fronthaul_cap;  // per BS
};

struct KktReport {
  double stationarity = 0.0;      // ||reward - (A + D) w||, stacked over vars
  double stationarity_rel = 0.0;  // divided by the stacked reward norm
  double power_residual = 0.0;    // max_b (usage - P_b) / P_b, clipped at 0
  double fronthaul_residual = 0.0;
  double complementarity = 0.0;   // max_b multiplier * slack, over max(1, |primal|)
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;               // (dual - primal) / max(1, |dual|)
  int iterations = 0;
  bool converged = false;
  std::vector<double> eta;        // power multipliers per BS
  std::vector<double> lambda;     // fronthaul multipliers per BS

  bool within(double tol) const {
    return stationarity_rel <= tol && power_residual <= tol && fronthaul_residual <= tol &&
           gap <= tol;
  }
};

struct BeamSolution {
  std::vector<ComplexVec> w;  // one per var
  KktReport report;
};

/// Dual decomposition with closed-form primal w(eta, lambda) and coordinate
/// bisection on each multiplier (at most 200 sweeps of 100 bisection steps).
BeamSolution solve(const BeamProblem& problem, double tol = 1e-6);

/// Objective value sum 2 Re{r^H w} - w^H A w.
double objective(const BeamProblem& problem, const std::vector<ComplexVec>& w);

/// Residuals of an arbitrary w, computed without the solver: multipliers are
/// the per-BS nonnegative least-squares fit of the stationarity condition.
KktReport certify(const BeamProblem& problem, const std::vector<ComplexVec>& w,
                  double tol = 1e-6);

/// Power and fronthaul usage per BS.
std::vector<double> power_usage(const BeamProblem& problem, const std::vector<ComplexVec>& w);
std::vector<double> fronthaul_usage(const BeamProblem& problem, const std::vector<ComplexVec>& w);

nlohmann::json to_json(const BeamProblem& problem);
nlohmann::json to_json(const KktReport& report);

}  // namespace haps
