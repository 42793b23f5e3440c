#include "haps/qcqp.hpp"

#include "haps/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haps {
namespace {

struct Touch {
  int var = 0;
  int block = 0;  // index into the var's layout blocks
};

std::vector<std::vector<Touch>> touching(const BeamProblem& p) {
  std::vector<std::vector<Touch>> out(p.power_cap.size());
  for (int k = 0; k < static_cast<int>(p.vars.size()); ++k) {
    const auto& layout = p.layouts[p.vars[k].cluster];
    for (int i = 0; i < static_cast<int>(layout.blocks.size()); ++i) {
      out[layout.blocks[i].bs].push_back({k, i});
    }
  }
  return out;
}

// A_k + D_k. `skip_eta` / `skip_lambda` name a BS whose multiplier is left out.
ComplexMat system_matrix(const BeamProblem& p, int k, const std::vector<double>& eta,
                         const std::vector<double>& lambda, int skip_eta = -1,
                         int skip_lambda = -1) {
  const BeamVar& v = p.vars[k];
  const auto& layout = p.layouts[v.cluster];
  ComplexMat m = p.forms[v.form];
  for (size_t i = 0; i < layout.blocks.size(); ++i) {
    const Block& b = layout.blocks[i];
    double d = 0.0;
    if (b.bs != skip_eta) d += eta[b.bs];
    if (b.bs != skip_lambda) d += lambda[b.bs] * v.rho[i];
    m.diagonal().segment(b.offset, b.size).array() += d;
  }
  return m;
}

std::vector<ComplexVec> primal(const BeamProblem& p, const std::vector<double>& eta,
                               const std::vector<double>& lambda) {
  std::vector<ComplexVec> w;
  w.reserve(p.vars.size());
  for (int k = 0; k < static_cast<int>(p.vars.size()); ++k) {
    const ComplexMat m = system_matrix(p, k, eta, lambda);
    w.push_back(psd_solve(m, p.vars[k].reward));
  }
  return w;
}

bool finite_cap(double c) { return std::isfinite(c) && c > 0.0; }

KktReport residuals(const BeamProblem& p, const std::vector<ComplexVec>& w,
                    const std::vector<double>& eta, const std::vector<double>& lambda) {
  KktReport r;
  r.eta = eta;
  r.lambda = lambda;
  double stat2 = 0.0;
  double reward2 = 0.0;
  for (int k = 0; k < static_cast<int>(p.vars.size()); ++k) {
    const ComplexMat m = system_matrix(p, k, eta, lambda);
    stat2 += (p.vars[k].reward - m * w[k]).squaredNorm();
    reward2 += p.vars[k].reward.squaredNorm();
  }
  r.stationarity = std::sqrt(stat2);
  r.stationarity_rel = reward2 > 0.0 ? r.stationarity / std::sqrt(reward2) : r.stationarity;
  r.primal = objective(p, w);

  const auto pu = power_usage(p, w);
  const auto fu = fronthaul_usage(p, w);
  double slack_sum = 0.0;
  double worst_slack = 0.0;
  for (size_t b = 0; b < p.power_cap.size(); ++b) {
    r.power_residual = std::max(r.power_residual, (pu[b] - p.power_cap[b]) / p.power_cap[b]);
    const double ps = eta[b] * (p.power_cap[b] - pu[b]);
    slack_sum += ps;
    worst_slack = std::max(worst_slack, ps);
    if (finite_cap(p.fronthaul_cap[b])) {
      r.fronthaul_residual =
          std::max(r.fronthaul_residual, (fu[b] - p.fronthaul_cap[b]) / p.fronthaul_cap[b]);
      const double fs = lambda[b] * (p.fronthaul_cap[b] - fu[b]);
      slack_sum += fs;
      worst_slack = std::max(worst_slack, fs);
    }
  }
  r.dual = r.primal + slack_sum;
  r.gap = std::abs(slack_sum) / std::max(1.0, std::abs(r.dual));
  r.complementarity = worst_slack / std::max(1.0, std::abs(r.primal));
  return r;
}

}  // namespace

double objective(const BeamProblem& p, const std::vector<ComplexVec>& w) {
  double total = 0.0;
  for (size_t k = 0; k < p.vars.size(); ++k) {
    const BeamVar& v = p.vars[k];
    total += 2.0 * v.reward.dot(w[k]).real() - w[k].dot(p.forms[v.form] * w[k]).real();
  }
  return total;
}

std::vector<double> power_usage(const BeamProblem& p, const std::vector<ComplexVec>& w) {
  std::vector<double> u(p.power_cap.size(), 0.0);
  for (size_t k = 0; k < p.vars.size(); ++k) {
    for (const Block& b : p.layouts[p.vars[k].cluster].blocks) {
      u[b.bs] += w[k].segment(b.offset, b.size).squaredNorm();
    }
  }
  return u;
}

std::vector<double> fronthaul_usage(const BeamProblem& p, const std::vector<ComplexVec>& w) {
  std::vector<double> u(p.power_cap.size(), 0.0);
  for (size_t k = 0; k < p.vars.size(); ++k) {
    const auto& blocks = p.layouts[p.vars[k].cluster].blocks;
    for (size_t i = 0; i < blocks.size(); ++i) {
      u[blocks[i].bs] += p.vars[k].rho[i] * w[k].segment(blocks[i].offset, blocks[i].size).squaredNorm();
    }
  }
  return u;
}

BeamSolution solve(const BeamProblem& p, double tol) {
  const int nbs = static_cast<int>(p.power_cap.size());
  const auto touch = touching(p);
  std::vector<double> eta(nbs, 0.0);
  std::vector<double> lambda(nbs, 0.0);

  double total = 0.0;
  for (const auto& v : p.vars) total += v.reward.squaredNorm();
  BeamSolution sol;
  if (total == 0.0) {
    for (const auto& v : p.vars) sol.w.push_back(ComplexVec::Zero(v.reward.size()));
    sol.report = residuals(p, sol.w, eta, lambda);
    sol.report.converged = true;
    return sol;
  }

  std::vector<char> has_fh(nbs, 0);
  double min_power = std::numeric_limits<double>::infinity();
  for (int b = 0; b < nbs; ++b) {
    if (touch[b].empty()) continue;
    min_power = std::min(min_power, p.power_cap[b]);
    if (!finite_cap(p.fronthaul_cap[b])) continue;
    for (const Touch& t : touch[b]) {
      if (p.vars[t.var].rho[t.block] > 0.0) has_fh[b] = 1;
    }
  }
  // Starting point where every constraint already holds.
  const double eta0 = std::sqrt(total / min_power);
  for (int b = 0; b < nbs; ++b) {
    if (touch[b].empty()) continue;
    eta[b] = eta0;
    if (has_fh[b]) lambda[b] = total / (eta0 * p.fronthaul_cap[b]);
  }

  const double inner = tol / 10.0;
  int sweep = 0;
  KktReport report;
  for (sweep = 1; sweep <= 200; ++sweep) {
    for (int b = 0; b < nbs; ++b) {
      if (touch[b].empty()) continue;
      std::vector<MultiplierTerm> terms;
      for (const Touch& t : touch[b]) {
        const Block& blk = p.layouts[p.vars[t.var].cluster].blocks[t.block];
        const ComplexMat m = system_matrix(p, t.var, eta, lambda, b, -1);
        auto part = schur_terms(m, {p.vars[t.var].reward}, blk.offset, blk.size, 1.0);
        terms.insert(terms.end(), part.begin(), part.end());
      }
      eta[b] = bisect_multiplier(terms, p.power_cap[b]);
      if (!has_fh[b]) continue;
      terms.clear();
      for (const Touch& t : touch[b]) {
        const double rho = p.vars[t.var].rho[t.block];
        if (!(rho > 0.0)) continue;
        const Block& blk = p.layouts[p.vars[t.var].cluster].blocks[t.block];
        const ComplexMat m = system_matrix(p, t.var, eta, lambda, -1, b);
        auto part = schur_terms(m, {p.vars[t.var].reward}, blk.offset, blk.size, rho);
        terms.insert(terms.end(), part.begin(), part.end());
      }
      lambda[b] = bisect_multiplier(terms, p.fronthaul_cap[b]);
    }
    sol.w = primal(p, eta, lambda);
    report = residuals(p, sol.w, eta, lambda);
    if (report.gap <= inner && report.power_residual <= inner &&
        report.fronthaul_residual <= inner) {
      report.converged = true;
      break;
    }
  }
  // Coordinate steps keep each multiplier on its feasible side, but a later
  // step may push an earlier BS marginally over; pull back uniformly.
  const auto pu = power_usage(p, sol.w);
  const auto fu = fronthaul_usage(p, sol.w);
  double s = 1.0;
  for (int b = 0; b < nbs; ++b) {
    if (pu[b] > p.power_cap[b]) s = std::min(s, std::sqrt(p.power_cap[b] / pu[b]));
    if (finite_cap(p.fronthaul_cap[b]) && fu[b] > p.fronthaul_cap[b]) {
      s = std::min(s, std::sqrt(p.fronthaul_cap[b] / fu[b]));
    }
  }
  if (s < 1.0) {
    for (auto& w : sol.w) w *= s;
    const bool converged = report.converged;
    report = residuals(p, sol.w, eta, lambda);
    report.converged = converged;
  }
  report.iterations = std::min(sweep, 200);
  sol.report = report;
  return sol;
}

KktReport certify(const BeamProblem& p, const std::vector<ComplexVec>& w, double tol) {
  const int nbs = static_cast<int>(p.power_cap.size());
  const auto touch = touching(p);
  std::vector<ComplexVec> c;
  c.reserve(p.vars.size());
  for (size_t k = 0; k < p.vars.size(); ++k) {
    c.push_back(p.vars[k].reward - p.forms[p.vars[k].form] * w[k]);
  }
  std::vector<double> eta(nbs, 0.0);
  std::vector<double> lambda(nbs, 0.0);
  for (int b = 0; b < nbs; ++b) {
    double g1 = 0, g2 = 0, g3 = 0, h1 = 0, h2 = 0;
    for (const Touch& t : touch[b]) {
      const Block& blk = p.layouts[p.vars[t.var].cluster].blocks[t.block];
      const ComplexVec x = w[t.var].segment(blk.offset, blk.size);
      const ComplexVec cb = c[t.var].segment(blk.offset, blk.size);
      const double rho = p.vars[t.var].rho[t.block];
      const double xx = x.squaredNorm();
      const double xc = x.dot(cb).real();
      g1 += xx;
      g2 += rho * xx;
      g3 += rho * rho * xx;
      h1 += xc;
      h2 += rho * xc;
    }
    const bool fh = finite_cap(p.fronthaul_cap[b]);
    // Minimize g1 e^2 + 2 g2 e l + g3 l^2 - 2 (h1 e + h2 l) over e, l >= 0.
    auto cost = [&](double e, double l) {
      return g1 * e * e + 2 * g2 * e * l + g3 * l * l - 2 * (h1 * e + h2 * l);
    };
    double be = 0.0, bl = 0.0, best = 0.0;
    auto consider = [&](double e, double l) {
      if (e < 0 || l < 0 || !std::isfinite(e) || !std::isfinite(l)) return;
      const double v = cost(e, l);
      if (v < best) {
        best = v;
        be = e;
        bl = l;
      }
    };
    if (g1 > 0) consider(h1 / g1, 0.0);
    if (fh && g3 > 0) consider(0.0, h2 / g3);
    const double det = g1 * g3 - g2 * g2;
    if (fh && det > 1e-12 * g1 * g3) {
      consider((h1 * g3 - h2 * g2) / det, (g1 * h2 - g2 * h1) / det);
    }
    eta[b] = be;
    lambda[b] = bl;
  }
  KktReport r = residuals(p, w, eta, lambda);
  r.converged = r.within(tol);
  return r;
}

nlohmann::json to_json(const BeamProblem& p) {
  using nlohmann::json;
  auto vec = [](const ComplexVec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
    return a;
  };
  json doc;
  doc["power_cap"] = p.power_cap;
  json fh = json::array();
  for (double c : p.fronthaul_cap) fh.push_back(finite_cap(c) ? json(c) : json(nullptr));
  doc["fronthaul_cap"] = fh;
  json layouts = json::array();
  for (const auto& l : p.layouts) {
    json blocks = json::array();
    for (const Block& b : l.blocks) blocks.push_back({{"bs", b.bs}, {"offset", b.offset}, {"size", b.size}});
    layouts.push_back({{"dim", l.dim}, {"blocks", blocks}});
  }
  doc["layouts"] = layouts;
  json forms = json::array();
  for (const auto& f : p.forms) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < f.rows(); ++r) rows.push_back(vec(f.row(r).transpose()));
    forms.push_back(rows);
  }
  doc["forms"] = forms;
  json vars = json::array();
  for (const auto& v : p.vars) {
    vars.push_back({{"cluster", v.cluster}, {"tone", v.tone}, {"user", v.user}, {"form", v.form},
                    {"reward", vec(v.reward)}, {"rho", v.rho}});
  }
  doc["vars"] = vars;
  return doc;
}

nlohmann::json to_json(const KktReport& r) {
  return {{"stationarity", r.stationarity},
          {"stationarity_rel", r.stationarity_rel},
          {"power_residual", r.power_residual},
          {"fronthaul_residual", r.fronthaul_residual},
          {"complementarity", r.complementarity},
          {"primal", r.primal},
          {"dual", r.dual},
          {"gap", r.gap},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

}  // namespace haps
