#include "haps/pf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haps {
namespace {

std::vector<double> tone_power(const Scenario& s, int q) {
  std::vector<double> p;
  for (const Block& b : s.layouts[q].blocks) p.push_back(s.base_stations[b.bs].max_power_w / s.tones);
  return p;
}

BeamformerSet probe_beams(const Scenario& s, const ChannelSet& ch, const std::vector<Link>& links) {
  BeamformerSet w = zero_beams(s, s.tones);
  for (const Link& l : links) {
    w(l.tone, l.user, l.cluster) =
        matched_filter(ch.h(l.tone, l.user, l.cluster), s.layouts[l.cluster], tone_power(s, l.cluster));
  }
  return w;
}

std::vector<double> fronthaul_caps_per_tone(const Scenario& s) {
  auto caps = s.fronthaul_caps_bpshz();
  for (double& c : caps) c *= s.tones;
  return caps;
}

// Power and fronthaul usage per BS, summed over tones.
void usage(const Scenario& s, const BeamformerSet& w, const std::vector<Link>& links,
           const std::vector<std::vector<double>>& rho, std::vector<double>& power,
           std::vector<double>& fronthaul) {
  power.assign(s.num_bs(), 0.0);
  fronthaul.assign(s.num_bs(), 0.0);
  for (size_t k = 0; k < links.size(); ++k) {
    const Link& l = links[k];
    const auto pw = block_powers(w(l.tone, l.user, l.cluster), s.layouts[l.cluster]);
    for (size_t i = 0; i < pw.size(); ++i) {
      const int bs = s.layouts[l.cluster].blocks[i].bs;
      power[bs] += pw[i];
      fronthaul[bs] += rho[k][i] * pw[i];
    }
  }
}

double worst_excess(const std::vector<double>& used, const std::vector<double>& cap) {
  double worst = 0.0;
  for (size_t b = 0; b < used.size(); ++b) worst = std::max(worst, (used[b] - cap[b]) / cap[b]);
  return worst;
}

// 1 + 2 Re{conj(y) s} - |y|^2 (noise + I) as a quadratic in the step t.
struct Quadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double at(double t) const { return c0 + t * (c1 + t * c2); }
  double slope(double t) const { return c1 + 2.0 * c2 * t; }
};

}  // namespace

std::vector<Link> Schedule::links() const {
  std::vector<Link> out;
  for (int n = 0; n < tones; ++n) {
    for (int q = 0; q < clusters; ++q) {
      if (at(q, n) >= 0) out.push_back({n, at(q, n), q});
    }
  }
  return out;
}

void AvgRates::update(const std::vector<double>& r) {
  for (size_t u = 0; u < rbar.size(); ++u) rbar[u] = (1.0 - eta) * rbar[u] + eta * r[u];
  ++slot;
}

std::vector<int> pf_pools(const Scenario& s, const ChannelSet& ch) {
  std::vector<int> pools(s.num_users(), -1);
  for (int u = 0; u < s.num_users(); ++u) pools[u] = strongest_cluster(s, ch, u);
  return pools;
}

LinkArray<double> probe_rates(const Scenario& s, const ChannelSet& ch, const std::vector<int>& pools,
                              const BeamformerSet& w_prev, const std::vector<Link>& prev_links) {
  LinkArray<double> r(s.tones, s.num_users(), s.num_clusters(), 0.0);
  for (int n = 0; n < s.tones; ++n) {
    for (int u = 0; u < s.num_users(); ++u) {
      const int q = pools[u];
      if (q < 0) continue;
      const ComplexVec beam = matched_filter(ch.h(n, u, q), s.layouts[q], tone_power(s, q));
      double interference = 0.0;
      for (const Link& j : prev_links) {
        if (j.tone == n && j.cluster != q) interference += received_power(ch, w_prev, u, j);
      }
      r(n, u, q) = rate(std::norm(ch.h(n, u, q).dot(beam)) / (ch.noise_w + interference));
    }
  }
  return r;
}

Schedule pf_schedule(const LinkArray<double>& tone_rates, const std::vector<int>& pools,
                     const AvgRates& avg) {
  Schedule sched(tone_rates.clusters(), tone_rates.tones());
  for (int n = 0; n < tone_rates.tones(); ++n) {
    for (int q = 0; q < tone_rates.clusters(); ++q) {
      double best = -std::numeric_limits<double>::infinity();
      for (int u = 0; u < static_cast<int>(pools.size()); ++u) {
        if (pools[u] != q) continue;
        const double metric = tone_rates(n, u, q) / avg.rbar[u];
        if (metric > best) {
          best = metric;
          sched.at(q, n) = u;
        }
      }
    }
  }
  return sched;
}

std::vector<double> pf_weights(const AvgRates& avg) {
  std::vector<double> a;
  a.reserve(avg.rbar.size());
  for (double r : avg.rbar) a.push_back(1.0 / r);
  return a;
}

std::vector<double> ofdma_rates(const ChannelSet& ch, const BeamformerSet& w,
                                const std::vector<Link>& links, int num_users) {
  std::vector<double> r(num_users, 0.0);
  const auto g = sinr_all(ch, w, links);
  const double tones = w.tones();
  for (size_t k = 0; k < links.size(); ++k) r[links[k].user] += rate(g[k]) / tones;
  return r;
}

double weighted_fp(const ChannelSet& ch, const BeamformerSet& w, const std::vector<Link>& links,
                   const std::vector<double>& link_weights, const std::vector<Complex>& y) {
  double total = 0.0;
  for (size_t k = 0; k < links.size(); ++k) {
    const Link& l = links[k];
    const Complex s = ch.h(l.tone, l.user, l.cluster).dot(w(l.tone, l.user, l.cluster));
    const double interference = received_total(ch, w, links, l.user, l.tone) - std::norm(s);
    const double g = 1.0 + 2.0 * (std::conj(y[k]) * s).real() -
                     std::norm(y[k]) * (ch.noise_w + std::max(interference, 0.0));
    total += link_weights[k] * (g > 0.0 ? std::log2(g) : -std::numeric_limits<double>::infinity());
  }
  return total;
}

BeamStep solve_beams(const Scenario& s, const ChannelSet& ch, const std::vector<Link>& links,
                     const std::vector<double>& weights, const BeamformerSet& w0,
                     const std::vector<std::vector<double>>& rho, const PfSettings& cfg) {
  BeamStep step;
  step.w = w0;
  const size_t K = links.size();
  std::vector<double> lw(K);
  for (size_t k = 0; k < K; ++k) lw[k] = weights[links[k].user];
  const auto fh_caps = fronthaul_caps_per_tone(s);

  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < cfg.inner_max && K > 0; ++it) {
    // y step: exact maximizer of the surrogate at the current beams.
    std::vector<Complex> y(K);
    std::vector<double> g(K);
    for (size_t k = 0; k < K; ++k) {
      const Link& l = links[k];
      const Complex sig = ch.h(l.tone, l.user, l.cluster).dot(step.w(l.tone, l.user, l.cluster));
      const double den = ch.noise_w + std::max(received_total(ch, step.w, links, l.user, l.tone) - std::norm(sig), 0.0);
      y[k] = sig / den;
      g[k] = 1.0 + std::norm(sig) / den;
    }
    if (std::isnan(previous)) previous = weighted_fp(ch, step.w, links, lw, y);

    // Beam step: weighted quadratic model with the surrogate's gradient.
    BeamProblem prob;
    prob.layouts = s.layouts;
    prob.power_cap = s.power_caps_w();
    prob.fronthaul_cap = fh_caps;
    std::vector<double> c(K);
    for (size_t k = 0; k < K; ++k) c[k] = lw[k] / g[k];
    for (size_t j = 0; j < K; ++j) {
      const Link& lj = links[j];
      const int dim = s.layouts[lj.cluster].dim;
      ComplexMat a = ComplexMat::Zero(dim, dim);
      for (size_t k = 0; k < K; ++k) {
        if (k == j || links[k].tone != lj.tone) continue;
        const ComplexVec& h = ch.h(lj.tone, links[k].user, lj.cluster);
        a.selfadjointView<Eigen::Lower>().rankUpdate(h, c[k] * std::norm(y[k]));
      }
      prob.forms.push_back(a.selfadjointView<Eigen::Lower>());
      BeamVar v;
      v.cluster = lj.cluster;
      v.tone = lj.tone;
      v.user = lj.user;
      v.form = static_cast<int>(j);
      v.reward = c[j] * y[j] * ch.h(lj.tone, lj.user, lj.cluster);
      v.rho = rho[j];
      prob.vars.push_back(std::move(v));
    }
    const BeamSolution sol = solve(prob, cfg.solver_tol);
    step.last = sol.report;

    // Exact line search on the concave surrogate along the segment.
    std::vector<Quadratic> qd(K);
    for (size_t k = 0; k < K; ++k) {
      const Link& l = links[k];
      const ComplexVec& h = ch.h(l.tone, l.user, l.cluster);
      const Complex s0 = h.dot(step.w(l.tone, l.user, l.cluster));
      const Complex sd = h.dot(sol.w[k] - step.w(l.tone, l.user, l.cluster));
      double i0 = 0.0, i1 = 0.0, i2 = 0.0;
      for (size_t j = 0; j < K; ++j) {
        if (j == k || links[j].tone != l.tone) continue;
        const ComplexVec& hj = ch.h(l.tone, l.user, links[j].cluster);
        const ComplexVec& wj = step.w(l.tone, links[j].user, links[j].cluster);
        const Complex a = hj.dot(wj);
        const Complex b = hj.dot(sol.w[j] - wj);
        i0 += std::norm(a);
        i1 += (std::conj(a) * b).real();
        i2 += std::norm(b);
      }
      const double yy = std::norm(y[k]);
      qd[k].c0 = 1.0 + 2.0 * (std::conj(y[k]) * s0).real() - yy * (ch.noise_w + i0);
      qd[k].c1 = 2.0 * (std::conj(y[k]) * sd).real() - 2.0 * yy * i1;
      qd[k].c2 = -yy * i2;
    }
    double t_hi = 1.0;
    for (const Quadratic& q : qd) {
      if (q.at(1.0) > 0.0) continue;
      // First positive root of the concave quadratic (it is positive at 0).
      double lo = 0.0, hi = 1.0;
      for (int b = 0; b < 200; ++b) {
        const double mid = 0.5 * (lo + hi);
        (q.at(mid) > 0.0 ? lo : hi) = mid;
      }
      t_hi = std::min(t_hi, lo);
    }
    auto slope = [&](double t) {
      double d = 0.0;
      for (size_t k = 0; k < K; ++k) d += lw[k] * qd[k].slope(t) / qd[k].at(t);
      return d;
    };
    double t = 0.0;
    if (slope(t_hi) >= 0.0) {
      t = t_hi;
    } else if (slope(0.0) > 0.0) {
      double lo = 0.0, hi = t_hi;
      for (int b = 0; b < 100; ++b) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
      }
      t = lo;
    }
    for (size_t k = 0; k < K; ++k) {
      const Link& l = links[k];
      ComplexVec& wk = step.w(l.tone, l.user, l.cluster);
      wk = wk + t * (sol.w[k] - wk);
    }
    const double f = weighted_fp(ch, step.w, links, lw, y);
    step.inner_f.push_back(f);
    const double change = std::abs(f - previous) / std::max(1.0, std::abs(previous));
    previous = f;
    if (change < cfg.inner_tol) break;
  }
  std::vector<double> pu, fu;
  usage(s, step.w, links, rho, pu, fu);
  step.power_residual = std::max(0.0, worst_excess(pu, s.power_caps_w()));
  step.fronthaul_residual = std::max(0.0, worst_excess(fu, fh_caps));
  return step;
}

double PfRun::mean_jain() const {
  if (trace.size() < 2) return trace.empty() ? 0.0 : trace.front().row.jain;
  double total = 0.0;
  for (size_t t = 1; t < trace.size(); ++t) total += trace[t].row.jain;
  return total / static_cast<double>(trace.size() - 1);
}

PfRun run_pf(const Scenario& s, const ChannelSet& ch, const PfSettings& cfg) {
  PfRun run;
  run.pools = pf_pools(s, ch);
  const int U = s.num_users();

  auto slot_row = [&](int slot, const std::vector<double>& r) {
    TraceRow row;
    row.iter = slot;
    for (double x : r) {
      row.sum_rate += x;
      if (x >= cfg.serve_threshold) ++row.served_count;
    }
    row.jain = jain_index(r).value;
    row.served_fraction = served_fraction(run.avg.rbar, cfg.serve_threshold);
    for (double x : run.avg.rbar) row.sum_log_avg_rate += std::log(x);
    row.excused = true;  // weights change every slot
    return row;
  };

  // Warm start: round robin over each pool, equal-power matched filters.
  Schedule warm(s.num_clusters(), s.tones);
  for (int q = 0; q < s.num_clusters(); ++q) {
    std::vector<int> pool;
    for (int u = 0; u < U; ++u) {
      if (run.pools[u] == q) pool.push_back(u);
    }
    if (pool.empty()) continue;
    for (int n = 0; n < s.tones; ++n) warm.at(q, n) = pool[n % pool.size()];
  }
  std::vector<Link> prev_links = warm.links();
  BeamformerSet prev_w = probe_beams(s, ch, prev_links);
  run.last_rates = ofdma_rates(ch, prev_w, prev_links, U);
  run.avg.eta = cfg.eta_avg;
  run.avg.rbar.resize(U);
  for (int u = 0; u < U; ++u) run.avg.rbar[u] = std::max(run.last_rates[u], cfg.floor);
  {
    PfSlot slot0;
    slot0.row = slot_row(0, run.last_rates);
    slot0.slot_served = served_fraction(run.last_rates, cfg.serve_threshold);
    slot0.row.f_fp = 0.0;
    run.trace.push_back(slot0);
  }

  const auto fh_caps = fronthaul_caps_per_tone(s);
  for (int t = 1; t <= cfg.slots; ++t) {
    const auto inst = probe_rates(s, ch, run.pools, prev_w, prev_links);
    const Schedule sched = pf_schedule(inst, run.pools, run.avg);
    const auto alpha = pf_weights(run.avg);
    const auto links = sched.links();

    // Start point; rates and sparsity weights are frozen here.
    BeamformerSet w0 = probe_beams(s, ch, links);
    const auto g0 = sinr_all(ch, w0, links);
    std::vector<std::vector<double>> rho(links.size());
    for (size_t k = 0; k < links.size(); ++k) {
      const Link& l = links[k];
      for (double b : block_betas(w0(l.tone, l.user, l.cluster), s.layouts[l.cluster], cfg.epsilon)) {
        rho[k].push_back(rate(g0[k]) * b);
      }
    }
    std::vector<double> pu, fu;
    usage(s, w0, links, rho, pu, fu);
    double scale = 1.0;
    for (int b = 0; b < s.num_bs(); ++b) {
      if (fu[b] > fh_caps[b]) scale = std::min(scale, std::sqrt(fh_caps[b] / fu[b]));
    }
    if (scale < 1.0) {
      for (auto& v : w0) v *= scale;
    }

    BeamStep step = solve_beams(s, ch, links, alpha, w0, rho, cfg);
    run.last_rates = ofdma_rates(ch, step.w, links, U);
    run.avg.update(run.last_rates);

    PfSlot slot;
    slot.row = slot_row(t, run.last_rates);
    slot.row.f_fp = step.inner_f.empty() ? 0.0 : step.inner_f.back();
    slot.row.power_residual = step.power_residual;
    slot.row.fronthaul_residual = step.fronthaul_residual;
    slot.row.inner_iters = static_cast<int>(step.inner_f.size());
    slot.slot_served = served_fraction(run.last_rates, cfg.serve_threshold);
    slot.inner_f = std::move(step.inner_f);
    run.trace.push_back(std::move(slot));
    prev_w = std::move(step.w);
    prev_links = links;
  }
  return run;
}

}  // namespace haps
