#pragma once

#include "haps/channel.hpp"
#include "haps/fp_core.hpp"
#include "haps/numerics.hpp"
#include "haps/scenario.hpp"

#include <vector>

namespace haps::test {

inline ComplexVec vec(std::initializer_list<Complex> xs) {
  ComplexVec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Complex x : xs) v(i++) = x;
  return v;
}

inline ComplexVec random_vec(Rng& rng, int dim, double var = 1.0) {
  ComplexVec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.complex_normal(var);
  return v;
}

/// Hand-built channel table: every entry zero of length `dim`.
inline ChannelSet toy_channels(int tones, int users, int clusters, int dim, double noise) {
  ChannelSet ch;
  ch.h = LinkArray<ComplexVec>(tones, users, clusters, ComplexVec::Zero(dim));
  ch.noise_w = noise;
  return ch;
}

inline ClusterLayout one_block(int bs, int dim) {
  ClusterLayout l;
  l.blocks.push_back({bs, 0, dim});
  l.dim = dim;
  return l;
}

/// Random single-carrier instance: clusters of one BS with `antennas`
/// antennas, every user associated (user u to cluster u % clusters unless
/// `drop` users are left out), random beams.
struct Instance {
  ChannelSet ch;
  BeamformerSet w;
  Association z;
  std::vector<Link> links;
  std::vector<ClusterLayout> layouts;
};

inline Instance random_instance(Rng& rng, int clusters, int users, int antennas,
                                double noise = 0.1) {
  Instance in;
  in.ch = toy_channels(1, users, clusters, antennas, noise);
  in.w = BeamformerSet(1, users, clusters, ComplexVec::Zero(antennas));
  for (int q = 0; q < clusters; ++q) in.layouts.push_back(one_block(q, antennas));
  for (int u = 0; u < users; ++u) {
    for (int q = 0; q < clusters; ++q) in.ch.h(0, u, q) = random_vec(rng, antennas);
  }
  in.z.serving.assign(users, -1);
  for (int u = 0; u < users; ++u) {
    const int q = static_cast<int>(rng.uniform() * (clusters + 1));  // == clusters: unserved
    if (q < clusters) {
      in.z.serving[u] = q;
      in.w(0, u, q) = random_vec(rng, antennas, 0.5);
    }
  }
  in.links = active_links(in.z);
  return in;
}

}  // namespace haps::test
