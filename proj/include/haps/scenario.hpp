#pragma once

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace haps {

/// Tier of a transmitter or cluster, and kind of a user. For base stations
/// and clusters kAerial means hot-air balloon (HBS); for users it means UAV.
enum class Tier { kTerrestrial, kAerial };

const char* to_string(Tier tier);

/// Schema or partition violation while building a scenario.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double distance(const Position& a, const Position& b);

struct BaseStation {
  int id = 0;
  Tier tier = Tier::kTerrestrial;
  Position pos;
  int antennas = 1;
  double max_power_w = 0.0;
  double fronthaul_bps = 0.0;
};

struct Cluster {
  int id = 0;
  Tier tier = Tier::kTerrestrial;
  std::vector<int> members;  // base-station ids, ascending
};

struct User {
  int id = 0;
  Tier kind = Tier::kTerrestrial;
  Position pos;
};

/// Where one base station's antennas sit inside its cluster's stacked vector.
struct Block {
  int bs = 0;
  int offset = 0;
  int size = 0;
};

struct ClusterLayout {
  std::vector<Block> blocks;
  int dim = 0;
};

/// Composite channel model parameters. Defaults are the simulation table
/// values; carrier frequency and reference distance complete the path-loss
/// intercept.
struct ChannelParams {
  double carrier_hz = 2.0e9;
  double reference_distance_m = 1.0;
  double path_loss_exponent_tbs = 3.76;
  double path_loss_exponent_hbs = 2.0;
  double shadowing_std_db = 8.0;
  double rayleigh_power_db = 0.0;
  double rician_k_db = 10.0;
};

struct TierConfig {
  int count = 0;
  int antennas = 2;
  double max_power_dbm = 32.0;
  double fronthaul_bps = 500e6;
  double height_min_m = 25.0;
  double height_max_m = 25.0;
  int cluster_size = 3;
};

struct ZoneConfig {
  double urban_area = 0.2;
  double suburban_area = 0.3;
  double rural_area = 0.5;
  double urban_users = 0.6;
  double suburban_users = 0.3;
  double rural_users = 0.1;
};

struct ScenarioConfig {
  double area_side_m = 17320.508075688772;  // sqrt(300 km^2)
  double bandwidth_hz = 10e6;
  int tones = 1;
  double noise_psd_dbm_hz = -169.0;
  std::uint64_t seed = 1;

  TierConfig tbs{0, 2, 32.0, 500e6, 25.0, 25.0, 3};
  TierConfig hbs{0, 2, 32.0, 500e6, 1000.0, 2000.0, 3};
  double tbs_jitter = 0.5;  // fraction of a grid cell

  int terrestrial_users = 0;
  int aerial_users = 0;
  double terrestrial_user_height_m = 1.5;
  double aerial_height_min_m = 10.0;
  double aerial_height_max_m = 100.0;
  ZoneConfig zones;

  ChannelParams channel;

  /// 48 BSs (18 TBS, 30 HBS) in 8 clusters of 6; 100 users (70 + 30).
  static ScenarioConfig paper_default();
  /// 12 BSs (6 TBS, 6 HBS) in 4 clusters of 3; 20 users (14 + 6).
  static ScenarioConfig desk_default();
  /// 6 TBSs in 2 clusters of 3 serving 20 terrestrial users.
  static ScenarioConfig desk_terrestrial();
};

/// Same config without the balloon tier (same seed, so matched draws).
ScenarioConfig terrestrial_only(ScenarioConfig config);

/// Throws ConfigError listing every violated rule.
void validate(const ScenarioConfig& config);

nlohmann::json to_json(const ScenarioConfig& config);
/// Missing keys take their defaults; unknown keys and bad values are errors.
ScenarioConfig config_from_json(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);

struct Scenario {
  double area_side_m = 0.0;
  double bandwidth_hz = 0.0;
  int tones = 1;
  double noise_psd_dbm_hz = 0.0;
  std::uint64_t seed = 0;
  ChannelParams channel;
  std::vector<BaseStation> base_stations;
  std::vector<Cluster> clusters;
  std::vector<User> users;
  std::vector<ClusterLayout> layouts;  // one per cluster

  int num_users() const { return static_cast<int>(users.size()); }
  int num_clusters() const { return static_cast<int>(clusters.size()); }
  int num_bs() const { return static_cast<int>(base_stations.size()); }

  /// Total noise power over the whole band, watts.
  double total_noise_w() const;
  std::vector<double> power_caps_w() const;
  /// Fronthaul capacity in bit/s/Hz of the full band.
  std::vector<double> fronthaul_caps_bpshz() const;
};

Scenario build_scenario(const ScenarioConfig& config);

/// Aerial users may only be served by balloon clusters; terrestrial users by
/// any cluster. Throws std::out_of_range for an unknown user id.
std::vector<int> eligible_clusters(int user_id, const Scenario& scenario);

/// eligible_clusters for every user, indexed by user id.
std::vector<std::vector<int>> eligibility(const Scenario& scenario);

/// Throws ConfigError unless clusters partition the base stations and every
/// member shares its cluster's tier.
void check_partition(const Scenario& scenario);

}  // namespace haps
