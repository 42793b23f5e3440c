#pragma once

#include "haps/channel.hpp"
#include "haps/link_array.hpp"
#include "haps/numerics.hpp"
#include "haps/scenario.hpp"

#include <numbers>
#include <vector>

namespace haps {

inline constexpr double kDefaultEpsilon = 1e-12;
/// The quadratic-transform terms are natural-log quantities; multiplying by
/// this factor expresses them in bits next to log2(1 + gamma).
inline constexpr double kBitsPerNat = 1.0 / std::numbers::ln2;

/// w(tone, user, cluster); inactive entries are zero vectors of cluster dim.
using BeamformerSet = LinkArray<ComplexVec>;

BeamformerSet zero_beams(const Scenario& scenario, int tones);

struct Link {
  int tone = 0;
  int user = 0;
  int cluster = 0;
  bool operator==(const Link&) const = default;
};

/// z as the serving cluster per user (-1 when unassociated), which makes the
/// one-cluster-per-user rule structural.
struct Association {
  std::vector<int> serving;

  bool z(int user, int cluster) const { return serving[user] == cluster; }
  int served_count() const;
  bool operator==(const Association&) const = default;
};

/// Active single-carrier links, ordered by user.
std::vector<Link> active_links(const Association& assoc);

/// |h_{user, src.cluster}^H w_src|^2 on src's tone.
double received_power(const ChannelSet& ch, const BeamformerSet& w, int user, const Link& src);

/// Everything `user` receives on `tone` from the active links (own signal
/// included).
double received_total(const ChannelSet& ch, const BeamformerSet& w,
                      const std::vector<Link>& links, int user, int tone);

/// SINR of each active link (desired signal excluded from the denominator).
std::vector<double> sinr_all(const ChannelSet& ch, const BeamformerSet& w,
                             const std::vector<Link>& links);

/// SINR of (user, cluster) on tone 0 under association z; 0 when z = 0.
double sinr(int user, int cluster, const BeamformerSet& w, const Association& z,
            const ChannelSet& ch);

/// log2(1 + sinr), bit/s/Hz.
double rate(double sinr);

/// gamma = SINR for every active link.
std::vector<double> update_gamma(const ChannelSet& ch, const BeamformerSet& w,
                                 const std::vector<Link>& links);

/// y = sqrt(1 + gamma) h^H w / (noise + everything received, own signal
/// included).
std::vector<Complex> update_y(const ChannelSet& ch, const BeamformerSet& w,
                              const std::vector<Link>& links, const std::vector<double>& gamma);

/// Quadratic-transform surrogate over the active links, in bits.
double f_fp(const ChannelSet& ch, const BeamformerSet& w, const std::vector<Link>& links,
            const std::vector<double>& gamma, const std::vector<Complex>& y);

/// 1 / (epsilon + ||block||^2).
double update_beta(const ComplexVec& block, double epsilon = kDefaultEpsilon);

/// update_beta for each BS block of a stacked beamformer.
std::vector<double> block_betas(const ComplexVec& w, const ClusterLayout& layout,
                                double epsilon = kDefaultEpsilon);

/// Squared norm of each BS block.
std::vector<double> block_powers(const ComplexVec& w, const ClusterLayout& layout);

/// sum_k |y_k|^2 h_{u_k, cluster} h_{u_k, cluster}^H over the active links on
/// `tone`: how cluster transmissions are penalized at every receiver.
ComplexMat receiver_form(const ChannelSet& ch, const std::vector<Link>& links,
                         const std::vector<Complex>& y, int cluster, int tone, int dim);

/// Per-BS matched filter with the given power on each block (zero blocks of h
/// get no power).
ComplexVec matched_filter(const ComplexVec& h, const ClusterLayout& layout,
                          const std::vector<double>& block_power);

/// Auxiliary values for a pair that is not currently carrying a signal: the
/// SINR and y it would see with `beam`, against the current interference from
/// links of other users.
struct Probe {
  double gamma = 0.0;
  Complex y{0.0, 0.0};
};
Probe probe_values(const ChannelSet& ch, const BeamformerSet& w, const std::vector<Link>& links,
                   const Link& pair, const ComplexVec& beam);

/// v_k = (A + D(eta))^+ r_k for one cluster with per-BS power caps, eta the
/// smallest multipliers meeting the caps.
struct AuxSolution {
  std::vector<ComplexVec> v;
  std::vector<double> eta;  // per layout block
  int sweeps = 0;
};
AuxSolution auxiliary_beamformers(const ComplexMat& a, const std::vector<ComplexVec>& rewards,
                                  const ClusterLayout& layout,
                                  const std::vector<double>& block_caps);

/// Benefit of serving a user from a cluster with auxiliary beam v, in bits:
/// log2(1+g) + (-g - |y|^2 noise - v^H A v + 2 sqrt(1+g) Re{conj(y) h^H v}) / ln 2.
double association_benefit(double gamma, Complex y, const ComplexVec& h, const ComplexVec& v,
                           const ComplexMat& a, double noise);

/// Per user, the eligible cluster with the largest benefit (ties: lowest id);
/// users whose eligible benefits are all <= 0 stay unassociated.
Association update_association(const std::vector<std::vector<double>>& alpha,
                               const std::vector<std::vector<int>>& eligibility);

}  // namespace haps
