#include "haps/sumrate.hpp"

#include "haps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haps {
namespace {

// Links with auxiliary values and the frozen weights their beam solve uses.
struct Assignment {
  std::vector<Link> links;
  std::vector<double> gamma;
  std::vector<Complex> y;
  std::vector<LinkWeights> weights;
};

std::vector<double> cluster_caps(const Scenario& s, int q) {
  std::vector<double> caps;
  for (const Block& b : s.layouts[q].blocks) caps.push_back(s.base_stations[b.bs].max_power_w);
  return caps;
}

std::vector<int> cluster_loads(const Scenario& s, const Association& z) {
  std::vector<int> n(s.num_clusters(), 0);
  for (int q : z.serving) {
    if (q >= 0) ++n[q];
  }
  return n;
}

BeamProblem make_problem(const Scenario& s, const ChannelSet& ch, const Assignment& a) {
  BeamProblem p;
  p.layouts = s.layouts;
  for (int q = 0; q < s.num_clusters(); ++q) {
    p.forms.push_back(receiver_form(ch, a.links, a.y, q, 0, s.layouts[q].dim));
  }
  for (size_t k = 0; k < a.links.size(); ++k) {
    const Link& l = a.links[k];
    BeamVar v;
    v.cluster = l.cluster;
    v.user = l.user;
    v.form = l.cluster;
    v.reward = std::sqrt(1.0 + a.gamma[k]) * a.y[k] * ch.h(0, l.user, l.cluster);
    for (double b : a.weights[k].beta) v.rho.push_back(a.weights[k].rate * b);
    p.vars.push_back(std::move(v));
  }
  p.power_cap = s.power_caps_w();
  p.fronthaul_cap = s.fronthaul_caps_bpshz();
  return p;
}

BeamformerSet beams_from(const Scenario& s, const Assignment& a, const std::vector<ComplexVec>& w) {
  BeamformerSet out = zero_beams(s, 1);
  for (size_t k = 0; k < a.links.size(); ++k) out(0, a.links[k].user, a.links[k].cluster) = w[k];
  return out;
}

void refresh_weights(const Scenario& s, const ChannelSet& ch, SumRateState& st, double epsilon) {
  const auto links = active_links(st.z);
  const auto g = sinr_all(ch, st.w, links);
  for (size_t k = 0; k < links.size(); ++k) {
    const Link& l = links[k];
    LinkWeights& lw = st.weights(0, l.user, l.cluster);
    lw.rate = rate(g[k]);
    lw.beta = block_betas(st.w(0, l.user, l.cluster), s.layouts[l.cluster], epsilon);
  }
}

double max_rel_excess(const std::vector<double>& usage, const std::vector<double>& cap) {
  double worst = 0.0;
  for (size_t b = 0; b < usage.size(); ++b) worst = std::max(worst, (usage[b] - cap[b]) / cap[b]);
  return worst;
}

}  // namespace

std::vector<double> user_rates(const ChannelSet& channels, const BeamformerSet& w,
                               const Association& z, int num_users) {
  std::vector<double> r(num_users, 0.0);
  const auto links = active_links(z);
  const auto g = sinr_all(channels, w, links);
  for (size_t k = 0; k < links.size(); ++k) r[links[k].user] = rate(g[k]);
  return r;
}

std::vector<double> fronthaul_load(const Scenario& s, const SumRateState& st) {
  std::vector<double> load(s.num_bs(), 0.0);
  for (const Link& l : active_links(st.z)) {
    const LinkWeights& lw = st.weights(0, l.user, l.cluster);
    const auto pw = block_powers(st.w(0, l.user, l.cluster), s.layouts[l.cluster]);
    for (size_t i = 0; i < pw.size(); ++i) {
      load[s.layouts[l.cluster].blocks[i].bs] += lw.rate * lw.beta[i] * pw[i];
    }
  }
  return load;
}

SumRateState initialize(const Scenario& s, const ChannelSet& ch, double epsilon) {
  SumRateState st;
  st.z.serving.assign(s.num_users(), -1);
  for (int u = 0; u < s.num_users(); ++u) st.z.serving[u] = strongest_cluster(s, ch, u);
  st.w = zero_beams(s, 1);
  st.weights = LinkArray<LinkWeights>(1, s.num_users(), s.num_clusters());
  const auto loads = cluster_loads(s, st.z);
  for (int u = 0; u < s.num_users(); ++u) {
    const int q = st.z.serving[u];
    if (q < 0) continue;
    auto power = cluster_caps(s, q);
    for (double& p : power) p /= loads[q];
    st.w(0, u, q) = matched_filter(ch.h(0, u, q), s.layouts[q], power);
  }
  refresh_weights(s, ch, st, epsilon);
  const auto load = fronthaul_load(s, st);
  const auto caps = s.fronthaul_caps_bpshz();
  double scale = 1.0;
  for (int b = 0; b < s.num_bs(); ++b) {
    if (load[b] > caps[b]) scale = std::min(scale, std::sqrt(caps[b] / load[b]));
  }
  if (scale < 1.0) {
    for (auto& v : st.w) v *= scale;
  }
  return st;
}

SumRateRun run(const Scenario& s, const ChannelSet& ch, SumRateState st,
               const SumRateSettings& cfg) {
  SumRateRun out;
  const auto elig = eligibility(s);
  const auto power_caps = s.power_caps_w();
  const auto fh_caps = s.fronthaul_caps_bpshz();
  const double noise = ch.noise_w;

  auto power_excess = [&](const BeamformerSet& w, const Association& z) {
    std::vector<double> used(s.num_bs(), 0.0);
    for (const Link& l : active_links(z)) {
      const auto pw = block_powers(w(0, l.user, l.cluster), s.layouts[l.cluster]);
      for (size_t i = 0; i < pw.size(); ++i) used[s.layouts[l.cluster].blocks[i].bs] += pw[i];
    }
    return max_rel_excess(used, power_caps);
  };
  auto record = [&](int iter, double f, const SumRateState& state) {
    SumRateIter row;
    row.iter = iter;
    row.f_fp = f;
    const auto r = user_rates(ch, state.w, state.z, s.num_users());
    for (double x : r) {
      row.sum_rate += x;
      if (x >= cfg.serve_threshold) ++row.served_count;
    }
    row.jain = jain_index(r).value;
    row.served_fraction = served_fraction(r, cfg.serve_threshold);
    row.associated = state.z.served_count();
    row.power_residual = std::max(0.0, power_excess(state.w, state.z));
    row.fronthaul_residual = std::max(0.0, max_rel_excess(fronthaul_load(s, state), fh_caps));
    return row;
  };

  {
    SumRateIter row0 = record(0, 0.0, st);
    row0.f_fp = row0.sum_rate;  // tight surrogate at the start point
    out.trace.push_back(row0);
  }
  double previous = out.trace.back().f_fp;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    // Coordinate steps in gamma and y at the current beams.
    Assignment cur;
    cur.links = active_links(st.z);
    cur.gamma = update_gamma(ch, st.w, cur.links);
    cur.y = update_y(ch, st.w, cur.links, cur.gamma);
    for (const Link& l : cur.links) cur.weights.push_back(st.weights(0, l.user, l.cluster));
    const double f_start = f_fp(ch, st.w, cur.links, cur.gamma, cur.y);
    const bool prev_infeasible =
        max_rel_excess(fronthaul_load(s, st), fh_caps) > cfg.solver_tol;

    // Values for every eligible pair: live links keep theirs, the rest probe.
    const auto loads = cluster_loads(s, st.z);
    LinkArray<Probe> value(1, s.num_users(), s.num_clusters());
    LinkArray<char> live(1, s.num_users(), s.num_clusters(), 0);
    LinkArray<LinkWeights> probe_weights(1, s.num_users(), s.num_clusters());
    for (size_t k = 0; k < cur.links.size(); ++k) {
      const Link& l = cur.links[k];
      if (cur.gamma[k] > 1e-9) {
        live(0, l.user, l.cluster) = 1;
        value(0, l.user, l.cluster) = {cur.gamma[k], cur.y[k]};
      }
    }
    for (int u = 0; u < s.num_users(); ++u) {
      for (int q : elig[u]) {
        if (live(0, u, q)) continue;
        auto power = cluster_caps(s, q);
        const int others = loads[q] - (st.z.serving[u] == q ? 1 : 0);
        for (double& p : power) p /= (others + 1);
        const ComplexVec beam = matched_filter(ch.h(0, u, q), s.layouts[q], power);
        const Probe pr = probe_values(ch, st.w, cur.links, {0, u, q}, beam);
        value(0, u, q) = pr;
        probe_weights(0, u, q).rate = rate(pr.gamma);
        probe_weights(0, u, q).beta = block_betas(beam, s.layouts[q], cfg.epsilon);
      }
    }

    // Auxiliary beams and association benefits.
    std::vector<std::vector<double>> alpha(s.num_users(),
                                           std::vector<double>(s.num_clusters(), -1.0));
    for (int q = 0; q < s.num_clusters(); ++q) {
      const int dim = s.layouts[q].dim;
      const ComplexMat a = receiver_form(ch, cur.links, cur.y, q, 0, dim);
      std::vector<int> users;
      std::vector<ComplexVec> rewards;
      for (int u = 0; u < s.num_users(); ++u) {
        if (std::find(elig[u].begin(), elig[u].end(), q) == elig[u].end()) continue;
        const Probe& pv = value(0, u, q);
        users.push_back(u);
        rewards.push_back(std::sqrt(1.0 + pv.gamma) * pv.y * ch.h(0, u, q));
      }
      if (users.empty()) continue;
      const AuxSolution aux = auxiliary_beamformers(a, rewards, s.layouts[q], cluster_caps(s, q));
      for (size_t i = 0; i < users.size(); ++i) {
        const int u = users[i];
        const Probe& pv = value(0, u, q);
        alpha[u][q] = association_benefit(pv.gamma, pv.y, ch.h(0, u, q), aux.v[i], a, noise);
      }
    }
    const Association next_z = update_association(alpha, elig);

    // Beam solve under the new association.
    Assignment nxt;
    nxt.links = active_links(next_z);
    for (const Link& l : nxt.links) {
      const bool keep = live(0, l.user, l.cluster) != 0;
      nxt.gamma.push_back(value(0, l.user, l.cluster).gamma);
      nxt.y.push_back(value(0, l.user, l.cluster).y);
      nxt.weights.push_back(keep ? st.weights(0, l.user, l.cluster)
                                 : probe_weights(0, l.user, l.cluster));
    }
    auto solve_for = [&](const Assignment& a, BeamformerSet& w_out, double& f_out) {
      const BeamProblem prob = make_problem(s, ch, a);
      const BeamSolution sol = solve(prob, cfg.solver_tol);
      if (!std::isfinite(sol.report.primal)) {
        out.state = st;
        throw SolverFailure("beam solve diverged at iteration " + std::to_string(iter), out);
      }
      w_out = beams_from(s, a, sol.w);
      f_out = f_fp(ch, w_out, a.links, a.gamma, a.y);
      return sol.report.iterations;
    };

    BeamformerSet w_new;
    double f_new = 0.0;
    SumRateIter row;
    row.solver_sweeps = solve_for(nxt, w_new, f_new);
    Association z_new = next_z;
    if (f_new < f_start - cfg.slack) {
      // The association step did not pay off: stay with the current links.
      BeamformerSet w_keep;
      double f_keep = 0.0;
      row.solver_sweeps += solve_for(cur, w_keep, f_keep);
      if (!prev_infeasible && f_keep < f_start) {
        // The current beams are feasible; never return a worse point.
        w_keep = st.w;
        f_keep = f_start;
      }
      w_new = std::move(w_keep);
      f_new = f_keep;
      z_new = st.z;
      row.reverted = !(next_z == st.z);
      nxt = cur;
    }
    row.refresh_excused = prev_infeasible && f_new < f_start - cfg.slack;

    // Commit, with the solve's weights for the residuals of this row.
    st.z = z_new;
    st.w = std::move(w_new);
    for (size_t k = 0; k < nxt.links.size(); ++k) {
      st.weights(0, nxt.links[k].user, nxt.links[k].cluster) = nxt.weights[k];
    }
    SumRateIter rec = record(iter, f_new, st);
    rec.reverted = row.reverted;
    rec.refresh_excused = row.refresh_excused;
    rec.solver_sweeps = row.solver_sweeps;
    out.trace.push_back(rec);

    refresh_weights(s, ch, st, cfg.epsilon);

    const double change = std::abs(f_new - previous) / std::max(1.0, std::abs(previous));
    previous = f_new;
    if (change < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.user_rates = user_rates(ch, st.w, st.z, s.num_users());
  out.state = std::move(st);
  return out;
}

SumRateRun run_sumrate(const Scenario& scenario, const ChannelSet& channels,
                       const SumRateSettings& settings) {
  return run(scenario, channels, initialize(scenario, channels, settings.epsilon), settings);
}

}  // namespace haps
