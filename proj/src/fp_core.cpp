#include "haps/fp_core.hpp"

#include "haps/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haps {

BeamformerSet zero_beams(const Scenario& scenario, int tones) {
  BeamformerSet w(tones, scenario.num_users(), scenario.num_clusters());
  for (int n = 0; n < tones; ++n) {
    for (int u = 0; u < scenario.num_users(); ++u) {
      for (int q = 0; q < scenario.num_clusters(); ++q) {
        w(n, u, q) = ComplexVec::Zero(scenario.layouts[q].dim);
      }
    }
  }
  return w;
}

int Association::served_count() const {
  return static_cast<int>(std::count_if(serving.begin(), serving.end(), [](int q) { return q >= 0; }));
}

std::vector<Link> active_links(const Association& assoc) {
  std::vector<Link> links;
  for (int u = 0; u < static_cast<int>(assoc.serving.size()); ++u) {
    if (assoc.serving[u] >= 0) links.push_back({0, u, assoc.serving[u]});
  }
  return links;
}

double received_power(const ChannelSet& ch, const BeamformerSet& w, int user, const Link& src) {
  const ComplexVec& h = ch.h(src.tone, user, src.cluster);
  const ComplexVec& x = w(src.tone, src.user, src.cluster);
  return std::norm(h.dot(x));  // Eigen's dot conjugates the first argument
}

double received_total(const ChannelSet& ch, const BeamformerSet& w,
                      const std::vector<Link>& links, int user, int tone) {
  double total = 0.0;
  for (const Link& j : links) {
    if (j.tone == tone) total += received_power(ch, w, user, j);
  }
  return total;
}

std::vector<double> sinr_all(const ChannelSet& ch, const BeamformerSet& w,
                             const std::vector<Link>& links) {
  std::vector<double> out;
  out.reserve(links.size());
  for (const Link& k : links) {
    const double signal = received_power(ch, w, k.user, k);
    const double interference = received_total(ch, w, links, k.user, k.tone) - signal;
    out.push_back(signal / (ch.noise_w + std::max(interference, 0.0)));
  }
  return out;
}

double sinr(int user, int cluster, const BeamformerSet& w, const Association& z,
            const ChannelSet& ch) {
  if (!z.z(user, cluster)) return 0.0;
  const auto links = active_links(z);
  const Link own{0, user, cluster};
  const double signal = received_power(ch, w, user, own);
  double interference = 0.0;
  for (const Link& j : links) {
    if (!(j == own)) interference += received_power(ch, w, user, j);
  }
  return signal / (ch.noise_w + interference);
}

double rate(double s) { return std::log2(1.0 + s); }

std::vector<double> update_gamma(const ChannelSet& ch, const BeamformerSet& w,
                                 const std::vector<Link>& links) {
  return sinr_all(ch, w, links);
}

std::vector<Complex> update_y(const ChannelSet& ch, const BeamformerSet& w,
                              const std::vector<Link>& links, const std::vector<double>& gamma) {
  std::vector<Complex> y;
  y.reserve(links.size());
  for (size_t k = 0; k < links.size(); ++k) {
    const Link& l = links[k];
    const Complex s = ch.h(l.tone, l.user, l.cluster).dot(w(l.tone, l.user, l.cluster));
    const double den = ch.noise_w + received_total(ch, w, links, l.user, l.tone);
    y.push_back(std::sqrt(1.0 + gamma[k]) * s / den);
  }
  return y;
}

double f_fp(const ChannelSet& ch, const BeamformerSet& w, const std::vector<Link>& links,
            const std::vector<double>& gamma, const std::vector<Complex>& y) {
  double total = 0.0;
  for (size_t k = 0; k < links.size(); ++k) {
    const Link& l = links[k];
    const Complex s = ch.h(l.tone, l.user, l.cluster).dot(w(l.tone, l.user, l.cluster));
    const double heard = received_total(ch, w, links, l.user, l.tone);
    const double g = gamma[k];
    const double nats = -g + 2.0 * std::sqrt(1.0 + g) * (std::conj(y[k]) * s).real() -
                        std::norm(y[k]) * (ch.noise_w + heard);
    total += std::log2(1.0 + g) + kBitsPerNat * nats;
  }
  return total;
}

double update_beta(const ComplexVec& block, double epsilon) {
  return 1.0 / (epsilon + block.squaredNorm());
}

std::vector<double> block_betas(const ComplexVec& w, const ClusterLayout& layout, double epsilon) {
  std::vector<double> out;
  out.reserve(layout.blocks.size());
  for (const Block& b : layout.blocks) out.push_back(update_beta(w.segment(b.offset, b.size), epsilon));
  return out;
}

std::vector<double> block_powers(const ComplexVec& w, const ClusterLayout& layout) {
  std::vector<double> out;
  out.reserve(layout.blocks.size());
  for (const Block& b : layout.blocks) out.push_back(w.segment(b.offset, b.size).squaredNorm());
  return out;
}

ComplexMat receiver_form(const ChannelSet& ch, const std::vector<Link>& links,
                         const std::vector<Complex>& y, int cluster, int tone, int dim) {
  ComplexMat a = ComplexMat::Zero(dim, dim);
  for (size_t k = 0; k < links.size(); ++k) {
    if (links[k].tone != tone || y[k] == Complex(0.0, 0.0)) continue;
    const ComplexVec& h = ch.h(tone, links[k].user, cluster);
    a.selfadjointView<Eigen::Lower>().rankUpdate(h, std::norm(y[k]));
  }
  return a.selfadjointView<Eigen::Lower>();
}

ComplexVec matched_filter(const ComplexVec& h, const ClusterLayout& layout,
                          const std::vector<double>& block_power) {
  ComplexVec v = ComplexVec::Zero(layout.dim);
  for (size_t i = 0; i < layout.blocks.size(); ++i) {
    const Block& b = layout.blocks[i];
    const double norm = h.segment(b.offset, b.size).norm();
    if (norm > 0.0) {
      v.segment(b.offset, b.size) = std::sqrt(block_power[i]) / norm * h.segment(b.offset, b.size);
    }
  }
  return v;
}

Probe probe_values(const ChannelSet& ch, const BeamformerSet& w, const std::vector<Link>& links,
                   const Link& pair, const ComplexVec& beam) {
  double interference = 0.0;
  for (const Link& j : links) {
    if (j.tone == pair.tone && j.user != pair.user) {
      interference += received_power(ch, w, pair.user, j);
    }
  }
  const Complex s = ch.h(pair.tone, pair.user, pair.cluster).dot(beam);
  Probe p;
  p.gamma = std::norm(s) / (ch.noise_w + interference);
  p.y = std::sqrt(1.0 + p.gamma) * s / (ch.noise_w + interference + std::norm(s));
  return p;
}

AuxSolution auxiliary_beamformers(const ComplexMat& a, const std::vector<ComplexVec>& rewards,
                                  const ClusterLayout& layout,
                                  const std::vector<double>& block_caps) {
  const int nb = static_cast<int>(layout.blocks.size());
  const int dim = layout.dim;
  AuxSolution sol;
  sol.eta.assign(nb, 0.0);
  sol.v.assign(rewards.size(), ComplexVec::Zero(dim));
  double total = 0.0;
  for (const auto& r : rewards) total += r.squaredNorm();
  if (rewards.empty() || total == 0.0) return sol;

  // All-equal multipliers at this level already meet every cap.
  const double min_cap = *std::min_element(block_caps.begin(), block_caps.end());
  std::fill(sol.eta.begin(), sol.eta.end(), std::sqrt(total / min_cap));

  auto system = [&](int skip) {
    ComplexMat m = a;
    for (int i = 0; i < nb; ++i) {
      if (i == skip) continue;
      const Block& b = layout.blocks[i];
      m.diagonal().segment(b.offset, b.size).array() += sol.eta[i];
    }
    return m;
  };
  auto solve_all = [&]() {
    ComplexMat rhs(dim, static_cast<Eigen::Index>(rewards.size()));
    for (size_t k = 0; k < rewards.size(); ++k) rhs.col(k) = rewards[k];
    return ComplexMat(psd_solve(system(-1), rhs));
  };

  for (sol.sweeps = 1; sol.sweeps <= 200; ++sol.sweeps) {
    for (int i = 0; i < nb; ++i) {
      const Block& b = layout.blocks[i];
      const auto terms = schur_terms(system(i), rewards, b.offset, b.size);
      sol.eta[i] = bisect_multiplier(terms, block_caps[i]);
    }
    const ComplexMat v = solve_all();
    bool done = true;
    for (int i = 0; i < nb && done; ++i) {
      const Block& b = layout.blocks[i];
      const double used = v.middleRows(b.offset, b.size).squaredNorm();
      if (used > block_caps[i] * (1.0 + 1e-10)) done = false;
      if (sol.eta[i] > 0.0 && used < block_caps[i] * (1.0 - 1e-10)) done = false;
    }
    if (done) break;
  }
  sol.sweeps = std::min(sol.sweeps, 200);
  const ComplexMat v = solve_all();
  for (size_t k = 0; k < rewards.size(); ++k) sol.v[k] = v.col(k);
  return sol;
}

double association_benefit(double gamma, Complex y, const ComplexVec& h, const ComplexVec& v,
                           const ComplexMat& a, double noise) {
  const double quad = v.dot(a * v).real();
  const double nats = -gamma - std::norm(y) * noise - quad +
                      2.0 * std::sqrt(1.0 + gamma) * (std::conj(y) * h.dot(v)).real();
  return std::log2(1.0 + gamma) + kBitsPerNat * nats;
}

Association update_association(const std::vector<std::vector<double>>& alpha,
                               const std::vector<std::vector<int>>& eligibility) {
  Association z;
  z.serving.assign(alpha.size(), -1);
  for (size_t u = 0; u < alpha.size(); ++u) {
    std::vector<int> order = eligibility[u];
    std::sort(order.begin(), order.end());
    double best = 0.0;
    for (int q : order) {
      if (alpha[u][q] > best) {
        best = alpha[u][q];
        z.serving[u] = q;
      }
    }
  }
  return z;
}

}  // namespace haps
