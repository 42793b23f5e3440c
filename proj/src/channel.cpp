#include "haps/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace haps {
namespace {

constexpr double kSpeedOfLight = 299792458.0;

}  // namespace

double path_loss_db(Tier tier, double distance_m, const ChannelParams& params) {
  const double d0 = params.reference_distance_m;
  if (!(distance_m >= d0)) {
    throw std::invalid_argument("path_loss_db: distance below reference distance");
  }
  const double alpha =
      tier == Tier::kTerrestrial ? params.path_loss_exponent_tbs : params.path_loss_exponent_hbs;
  const double intercept =
      20.0 * std::log10(4.0 * std::numbers::pi * params.carrier_hz * d0 / kSpeedOfLight);
  return intercept + 10.0 * alpha * std::log10(distance_m / d0);
}

double large_scale_gain(const Scenario& scenario, int user, int bs,
                        const ChannelOptions& options) {
  const BaseStation& b = scenario.base_stations.at(bs);
  const User& u = scenario.users.at(user);
  const double d = std::max(distance(b.pos, u.pos), scenario.channel.reference_distance_m);
  double loss = path_loss_db(b.tier, d, scenario.channel);
  if (b.tier == Tier::kTerrestrial && options.shadowing) {
    Rng rng(scenario.seed, stream_id(Stream::kShadowing, user, bs));
    loss += rng.normal(0.0, scenario.channel.shadowing_std_db);
  }
  return db_to_linear(-loss);
}

ComplexVec draw_block(Tier tier, double gain, int antennas, Rng& rng,
                      const ChannelParams& params, const ChannelOptions& options) {
  const double scatter_var = db_to_linear(params.rayleigh_power_db);
  ComplexVec x = ComplexVec::Zero(antennas);
  if (tier == Tier::kTerrestrial) {
    if (options.scattering) {
      for (int m = 0; m < antennas; ++m) x(m) = rng.complex_normal(scatter_var);
    }
  } else {
    const double k = db_to_linear(params.rician_k_db);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Complex los = std::sqrt(k / (k + 1.0)) * std::polar(1.0, phi);
    const double nlos = std::sqrt(1.0 / (k + 1.0));
    for (int m = 0; m < antennas; ++m) {
      x(m) = los;
      if (options.scattering) x(m) += nlos * rng.complex_normal(scatter_var);
    }
  }
  return std::sqrt(gain) * x;
}

namespace {

ComplexVec stacked_channel(const Scenario& s, int user, int cluster, int tone,
                           const std::vector<double>& gains, const ChannelOptions& options) {
  const ClusterLayout& layout = s.layouts.at(cluster);
  ComplexVec h = ComplexVec::Zero(layout.dim);
  if (s.users.at(user).kind == Tier::kAerial && s.clusters[cluster].tier == Tier::kTerrestrial) {
    return h;
  }
  for (const Block& blk : layout.blocks) {
    const BaseStation& bs = s.base_stations[blk.bs];
    const Stream base = tone == 0 ? Stream::kFading : Stream::kToneFading;
    Rng rng(s.seed, stream_id(base, user, blk.bs, tone));
    const double g = gains[static_cast<size_t>(user) * s.num_bs() + blk.bs];
    h.segment(blk.offset, blk.size) = draw_block(bs.tier, g, blk.size, rng, s.channel, options);
  }
  return h;
}

std::vector<double> all_gains(const Scenario& s, const ChannelOptions& options) {
  std::vector<double> g(static_cast<size_t>(s.num_users()) * s.num_bs());
  for (int u = 0; u < s.num_users(); ++u) {
    for (int b = 0; b < s.num_bs(); ++b) {
      g[static_cast<size_t>(u) * s.num_bs() + b] = large_scale_gain(s, u, b, options);
    }
  }
  return g;
}

}  // namespace

ComplexVec draw_channel(const Scenario& scenario, int user, int cluster, int tone,
                        const ChannelOptions& options) {
  if (tone < 0 || tone >= scenario.tones) throw std::out_of_range("draw_channel: bad tone");
  std::vector<double> gains(static_cast<size_t>(scenario.num_users()) * scenario.num_bs(), 0.0);
  for (const Block& blk : scenario.layouts.at(cluster).blocks) {
    gains[static_cast<size_t>(user) * scenario.num_bs() + blk.bs] =
        large_scale_gain(scenario, user, blk.bs, options);
  }
  return stacked_channel(scenario, user, cluster, tone, gains, options);
}

ChannelSet draw_channel_set(const Scenario& scenario, const ChannelOptions& options) {
  ChannelSet set;
  set.num_bs = scenario.num_bs();
  set.gain = all_gains(scenario, options);
  set.noise_w = scenario.total_noise_w() / scenario.tones;
  set.h = LinkArray<ComplexVec>(scenario.tones, scenario.num_users(), scenario.num_clusters());
  for (int n = 0; n < scenario.tones; ++n) {
    for (int u = 0; u < scenario.num_users(); ++u) {
      for (int q = 0; q < scenario.num_clusters(); ++q) {
        set.h(n, u, q) = stacked_channel(scenario, u, q, n, set.gain, options);
      }
    }
  }
  return set;
}

double cluster_gain(const Scenario& scenario, const ChannelSet& channels, int user,
                    int cluster) {
  double g = 0.0;
  for (int bs : scenario.clusters.at(cluster).members) g += channels.large_scale(user, bs);
  return g;
}

int strongest_cluster(const Scenario& scenario, const ChannelSet& channels, int user) {
  int best = -1;
  double best_gain = -1.0;
  for (int q : eligible_clusters(user, scenario)) {
    const double g = cluster_gain(scenario, channels, user, q);
    if (g > best_gain) {
      best_gain = g;
      best = q;
    }
  }
  return best;
}

void write_channels_csv(const ChannelSet& channels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write channel table '" + path + "'");
  char buf[128];
  std::snprintf(buf, sizeof buf, "# noise_w %.17g\n", channels.noise_w);
  out << buf << "tone,user,cluster,index,re,im\n";
  const auto& h = channels.h;
  for (int n = 0; n < h.tones(); ++n) {
    for (int u = 0; u < h.users(); ++u) {
      for (int q = 0; q < h.clusters(); ++q) {
        const ComplexVec& v = h(n, u, q);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g,%.17g\n", n, u, q,
                        static_cast<int>(i), v(i).real(), v(i).imag());
          out << buf;
        }
      }
    }
  }
}

ChannelSet read_channels_csv(const Scenario& scenario, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read channel table '" + path + "'");
  ChannelSet set;
  set.num_bs = scenario.num_bs();
  set.gain = all_gains(scenario, {});
  set.h = LinkArray<ComplexVec>(scenario.tones, scenario.num_users(), scenario.num_clusters());
  for (int n = 0; n < scenario.tones; ++n) {
    for (int u = 0; u < scenario.num_users(); ++u) {
      for (int q = 0; q < scenario.num_clusters(); ++q) {
        set.h(n, u, q) = ComplexVec::Zero(scenario.layouts[q].dim);
      }
    }
  }
  std::string line;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "# noise_w %lf", &set.noise_w) != 1) {
    throw std::runtime_error("channel table '" + path + "' lacks the noise row");
  }
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int n, u, q, i;
    double re, im;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf,%lf", &n, &u, &q, &i, &re, &im) != 6 || n < 0 ||
        n >= scenario.tones || u < 0 || u >= scenario.num_users() || q < 0 ||
        q >= scenario.num_clusters() || i < 0 || i >= scenario.layouts[q].dim) {
      throw std::runtime_error("bad channel row: " + line);
    }
    set.h(n, u, q)(i) = Complex(re, im);
  }
  return set;
}

}  // namespace haps
