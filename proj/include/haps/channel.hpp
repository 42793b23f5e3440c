#pragma once

#include "haps/link_array.hpp"
#include "haps/numerics.hpp"
#include "haps/scenario.hpp"

#include <string>
#include <vector>

namespace haps {

/// Free-space intercept at the reference distance plus a tier exponent.
/// Throws std::invalid_argument when distance < reference distance.
double path_loss_db(Tier tier, double distance_m, const ChannelParams& params = {});

/// Switches for deterministic limbs in tests.
struct ChannelOptions {
  bool shadowing = true;   // terrestrial log-normal term
  bool scattering = true;  // Rayleigh part (whole TBS block, NLOS limb of HBS)
};

/// Linear large-scale gain between a user and a base station: path loss
/// plus, for terrestrial BSs, one shadowing draw per (user, BS).
double large_scale_gain(const Scenario& scenario, int user, int bs,
                        const ChannelOptions& options = {});

/// Small-scale block of length `antennas` for one BS. `gain` is linear.
ComplexVec draw_block(Tier tier, double gain, int antennas, Rng& rng,
                      const ChannelParams& params, const ChannelOptions& options = {});

/// Stacked channel from every BS of `cluster` to `user` on `tone`. Draws come
/// from a per-(user, BS, tone) substream of the scenario seed. Terrestrial
/// clusters give aerial users an exact zero vector.
ComplexVec draw_channel(const Scenario& scenario, int user, int cluster, int tone,
                        const ChannelOptions& options = {});

struct ChannelSet {
  LinkArray<ComplexVec> h;       // (tone, user, cluster), length = cluster dim
  std::vector<double> gain;      // large-scale gain, (user, bs) row-major
  int num_bs = 0;
  double noise_w = 0.0;          // per tone

  const ComplexVec& at(int user, int cluster, int tone = 0) const { return h(tone, user, cluster); }
  double large_scale(int user, int bs) const {
    return gain[static_cast<size_t>(user) * num_bs + bs];
  }
};

ChannelSet draw_channel_set(const Scenario& scenario, const ChannelOptions& options = {});

/// Sum of large-scale gains from the cluster's BSs to the user.
double cluster_gain(const Scenario& scenario, const ChannelSet& channels, int user,
                    int cluster);

/// Eligible cluster with the largest cluster_gain (ties: lowest id), or -1.
int strongest_cluster(const Scenario& scenario, const ChannelSet& channels, int user);

/// CSV table: tone,user,cluster,index,re,im (plus a noise row).
void write_channels_csv(const ChannelSet& channels, const std::string& path);
/// Reads a table written by write_channels_csv. Large-scale gains are
/// recomputed from the scenario; the shape must match it.
ChannelSet read_channels_csv(const Scenario& scenario, const std::string& path);

}  // namespace haps
