#include "haps/scenario.hpp"

#include "haps/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace haps {
namespace {

struct Square {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double y) const {
    return x >= lo && x < hi && y >= lo && y < hi;
  }
};

Square centered_square(double area_side, double area_fraction) {
  const double side = area_side * std::sqrt(area_fraction);
  const double lo = 0.5 * (area_side - side);
  return {lo, lo + side};
}

// Uniform point inside `outer` but outside `inner` (inner may be empty).
Position sample_zone(Rng& rng, const Square& outer, const Square& inner) {
  for (;;) {
    const double x = rng.uniform(outer.lo, outer.hi);
    const double y = rng.uniform(outer.lo, outer.hi);
    if (inner.hi <= inner.lo || !inner.contains(x, y)) return {x, y, 0.0};
  }
}

std::vector<int> zone_counts(int n, const ZoneConfig& z) {
  const int urban = static_cast<int>(std::lround(z.urban_users * n));
  const int suburban =
      std::min(n - urban, static_cast<int>(std::lround(z.suburban_users * n)));
  return {urban, suburban, n - urban - suburban};
}

// Grid with ceil(sqrt(n)) columns covering [lo, lo+side)^2, row-major cells.
std::vector<Position> grid_points(int n, double lo, double side, double jitter,
                                  Rng* rng) {
  std::vector<Position> out;
  if (n <= 0) return out;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const double cw = side / cols;
  const double ch = side / rows;
  for (int i = 0; i < n; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    double x = lo + (c + 0.5) * cw;
    double y = lo + (r + 0.5) * ch;
    if (rng != nullptr && jitter > 0.0) {
      x += rng->uniform(-0.5, 0.5) * jitter * cw;
      y += rng->uniform(-0.5, 0.5) * jitter * ch;
    }
    out.push_back({x, y, 0.0});
  }
  return out;
}

double dist2d(const Position& a, double cx, double cy) {
  return std::hypot(a.x - cx, a.y - cy);
}

// Equal-size k-means over the given base stations (ids into `bss`).
std::vector<std::vector<int>> equal_size_kmeans(const std::vector<BaseStation>& bss,
                                                const std::vector<int>& ids,
                                                int cluster_size) {
  const int n = static_cast<int>(ids.size());
  const int k = n / cluster_size;
  if (k == 0) return {};

  // Farthest-point initialization, starting from the BS nearest the centroid.
  double mx = 0.0;
  double my = 0.0;
  for (int id : ids) {
    mx += bss[id].pos.x;
    my += bss[id].pos.y;
  }
  mx /= n;
  my /= n;
  std::vector<std::pair<double, double>> centers;
  int first = 0;
  for (int i = 1; i < n; ++i) {
    if (dist2d(bss[ids[i]].pos, mx, my) < dist2d(bss[ids[first]].pos, mx, my)) first = i;
  }
  centers.emplace_back(bss[ids[first]].pos.x, bss[ids[first]].pos.y);
  while (static_cast<int>(centers.size()) < k) {
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < n; ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& [cx, cy] : centers) d = std::min(d, dist2d(bss[ids[i]].pos, cx, cy));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    centers.emplace_back(bss[ids[best]].pos.x, bss[ids[best]].pos.y);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<std::tuple<double, int, int>> pairs;
    pairs.reserve(static_cast<size_t>(n) * k);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) {
        pairs.emplace_back(dist2d(bss[ids[i]].pos, centers[c].first, centers[c].second), i, c);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> next(n, -1);
    std::vector<int> fill(k, 0);
    for (const auto& [d, i, c] : pairs) {
      if (next[i] >= 0 || fill[c] >= cluster_size) continue;
      next[i] = c;
      ++fill[c];
    }
    const bool stable = next == assign;
    assign = std::move(next);
    if (stable) break;
    for (int c = 0; c < k; ++c) {
      double sx = 0.0;
      double sy = 0.0;
      for (int i = 0; i < n; ++i) {
        if (assign[i] == c) {
          sx += bss[ids[i]].pos.x;
          sy += bss[ids[i]].pos.y;
        }
      }
      centers[c] = {sx / cluster_size, sy / cluster_size};
    }
  }

  std::vector<std::vector<int>> groups(k);
  for (int i = 0; i < n; ++i) groups[assign[i]].push_back(ids[i]);
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end());
  return groups;
}

void check_tier(const TierConfig& t, const char* name, std::vector<std::string>& errs) {
  const std::string p = name;
  if (t.count < 0) errs.push_back(p + ".count must be >= 0");
  if (t.antennas < 1) errs.push_back(p + ".antennas must be >= 1");
  if (t.cluster_size < 1) errs.push_back(p + ".cluster_size must be >= 1");
  if (t.cluster_size >= 1 && t.count % t.cluster_size != 0) {
    errs.push_back(p + ".count must be a multiple of " + p + ".cluster_size");
  }
  if (!std::isfinite(t.max_power_dbm)) errs.push_back(p + ".max_power_dbm must be finite");
  if (!(t.fronthaul_bps > 0.0)) errs.push_back(p + ".fronthaul_bps must be > 0");
  if (!(t.height_min_m <= t.height_max_m)) {
    errs.push_back(p + ".height_min_m must be <= height_max_m");
  }
}

}  // namespace

const char* to_string(Tier tier) {
  return tier == Tier::kTerrestrial ? "terrestrial" : "aerial";
}

double distance(const Position& a, const Position& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

ScenarioConfig ScenarioConfig::paper_default() {
  ScenarioConfig c;
  c.tbs.count = 18;
  c.tbs.cluster_size = 6;
  c.hbs.count = 30;
  c.hbs.cluster_size = 6;
  c.terrestrial_users = 70;
  c.aerial_users = 30;
  return c;
}

ScenarioConfig ScenarioConfig::desk_default() {
  ScenarioConfig c;
  c.tbs.count = 6;
  c.hbs.count = 6;
  c.terrestrial_users = 14;
  c.aerial_users = 6;
  return c;
}

ScenarioConfig ScenarioConfig::desk_terrestrial() {
  ScenarioConfig c;
  c.tbs.count = 6;
  c.hbs.count = 0;
  c.terrestrial_users = 20;
  c.aerial_users = 0;
  return c;
}

ScenarioConfig terrestrial_only(ScenarioConfig config) {
  config.hbs.count = 0;
  return config;
}

void validate(const ScenarioConfig& c) {
  std::vector<std::string> errs;
  if (!(c.area_side_m > 0.0)) errs.push_back("area_side_m must be > 0");
  if (!(c.bandwidth_hz > 0.0)) errs.push_back("bandwidth_hz must be > 0");
  if (c.tones < 1) errs.push_back("tones must be >= 1");
  if (!std::isfinite(c.noise_psd_dbm_hz)) errs.push_back("noise_psd_dbm_hz must be finite");
  check_tier(c.tbs, "tbs", errs);
  check_tier(c.hbs, "hbs", errs);
  if (c.tbs.height_min_m < 0.0 || c.tbs.height_max_m > 50.0) {
    errs.push_back("tbs heights must lie in [0, 50] m");
  }
  if (c.hbs.height_min_m < 0.0 || c.hbs.height_max_m > 2000.0) {
    errs.push_back("hbs altitudes must lie in [0, 2000] m");
  }
  if (c.tbs.count + c.hbs.count < 1) errs.push_back("at least one base station is required");
  if (!(c.tbs_jitter >= 0.0 && c.tbs_jitter <= 1.0)) errs.push_back("tbs_jitter must lie in [0, 1]");
  if (c.terrestrial_users < 0 || c.aerial_users < 0) errs.push_back("user counts must be >= 0");
  if (c.terrestrial_users + c.aerial_users < 1) errs.push_back("at least one user is required");
  if (c.terrestrial_user_height_m < 0.0) errs.push_back("terrestrial_height_m must be >= 0");
  if (!(c.aerial_height_min_m >= 0.0 && c.aerial_height_min_m <= c.aerial_height_max_m &&
        c.aerial_height_max_m <= 100.0)) {
    errs.push_back("aerial heights must satisfy 0 <= min <= max <= 100 m");
  }
  const auto& z = c.zones;
  const double area_sum = z.urban_area + z.suburban_area + z.rural_area;
  if (!(z.urban_area > 0.0 && z.suburban_area >= 0.0 && z.rural_area >= 0.0) ||
      std::abs(area_sum - 1.0) > 1e-9) {
    errs.push_back("zone area fractions must be non-negative, urban > 0, and sum to 1");
  }
  const double user_sum = z.urban_users + z.suburban_users + z.rural_users;
  if (!(z.urban_users >= 0.0 && z.suburban_users >= 0.0 && z.rural_users >= 0.0) ||
      std::abs(user_sum - 1.0) > 1e-9) {
    errs.push_back("zone user fractions must be non-negative and sum to 1");
  }
  const auto& ch = c.channel;
  if (!(ch.carrier_hz > 0.0)) errs.push_back("channel.carrier_hz must be > 0");
  if (!(ch.reference_distance_m > 0.0)) errs.push_back("channel.reference_distance_m must be > 0");
  if (!(ch.path_loss_exponent_tbs > 0.0 && ch.path_loss_exponent_hbs > 0.0)) {
    errs.push_back("channel path-loss exponents must be > 0");
  }
  if (!(ch.shadowing_std_db >= 0.0)) errs.push_back("channel.shadowing_std_db must be >= 0");
  if (!std::isfinite(ch.rayleigh_power_db) || !std::isfinite(ch.rician_k_db)) {
    errs.push_back("channel.rayleigh_power_db and rician_k_db must be finite");
  }
  if (!errs.empty()) {
    std::ostringstream os;
    os << "invalid scenario config:";
    for (const auto& e : errs) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
}

// --- JSON -------------------------------------------------------------------

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown key '" + where + it.key() + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError("");
      out = v.get<int>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError("");
      }
      out = v.get<std::uint64_t>();
    } else {
      if (!v.is_number()) throw ConfigError("");
      out = v.get<double>();
    }
  } catch (const std::exception&) {
    throw ConfigError("key '" + where + key + "' has the wrong type");
  }
}

json tier_to_json(const TierConfig& t) {
  return {{"count", t.count},
          {"antennas", t.antennas},
          {"max_power_dbm", t.max_power_dbm},
          {"fronthaul_bps", t.fronthaul_bps},
          {"height_min_m", t.height_min_m},
          {"height_max_m", t.height_max_m},
          {"cluster_size", t.cluster_size}};
}

void tier_from_json(const json& j, TierConfig& t, const std::string& where) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  reject_unknown(j, {"count", "antennas", "max_power_dbm", "fronthaul_bps", "height_min_m",
                     "height_max_m", "cluster_size"},
                 where + ".");
  const std::string p = where + ".";
  read(j, "count", t.count, p);
  read(j, "antennas", t.antennas, p);
  read(j, "max_power_dbm", t.max_power_dbm, p);
  read(j, "fronthaul_bps", t.fronthaul_bps, p);
  read(j, "height_min_m", t.height_min_m, p);
  read(j, "height_max_m", t.height_max_m, p);
  read(j, "cluster_size", t.cluster_size, p);
}

}  // namespace

nlohmann::json to_json(const ScenarioConfig& c) {
  return {{"area_side_m", c.area_side_m},
          {"bandwidth_hz", c.bandwidth_hz},
          {"tones", c.tones},
          {"noise_psd_dbm_hz", c.noise_psd_dbm_hz},
          {"seed", c.seed},
          {"tbs", tier_to_json(c.tbs)},
          {"hbs", tier_to_json(c.hbs)},
          {"tbs_jitter", c.tbs_jitter},
          {"users",
           {{"terrestrial", c.terrestrial_users},
            {"aerial", c.aerial_users},
            {"terrestrial_height_m", c.terrestrial_user_height_m},
            {"aerial_height_min_m", c.aerial_height_min_m},
            {"aerial_height_max_m", c.aerial_height_max_m}}},
          {"zones",
           {{"urban_area", c.zones.urban_area},
            {"suburban_area", c.zones.suburban_area},
            {"rural_area", c.zones.rural_area},
            {"urban_users", c.zones.urban_users},
            {"suburban_users", c.zones.suburban_users},
            {"rural_users", c.zones.rural_users}}},
          {"channel",
           {{"carrier_hz", c.channel.carrier_hz},
            {"reference_distance_m", c.channel.reference_distance_m},
            {"path_loss_exponent_tbs", c.channel.path_loss_exponent_tbs},
            {"path_loss_exponent_hbs", c.channel.path_loss_exponent_hbs},
            {"shadowing_std_db", c.channel.shadowing_std_db},
            {"rayleigh_power_db", c.channel.rayleigh_power_db},
            {"rician_k_db", c.channel.rician_k_db}}}};
}

ScenarioConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario config must be a JSON object");
  reject_unknown(doc, {"area_side_m", "bandwidth_hz", "tones", "noise_psd_dbm_hz", "seed", "tbs",
                       "hbs", "tbs_jitter", "users", "zones", "channel"},
                 "");
  ScenarioConfig c;
  read(doc, "area_side_m", c.area_side_m, "");
  read(doc, "bandwidth_hz", c.bandwidth_hz, "");
  read(doc, "tones", c.tones, "");
  read(doc, "noise_psd_dbm_hz", c.noise_psd_dbm_hz, "");
  read(doc, "seed", c.seed, "");
  read(doc, "tbs_jitter", c.tbs_jitter, "");
  if (doc.contains("tbs")) tier_from_json(doc["tbs"], c.tbs, "tbs");
  if (doc.contains("hbs")) tier_from_json(doc["hbs"], c.hbs, "hbs");
  if (doc.contains("users")) {
    const auto& u = doc["users"];
    if (!u.is_object()) throw ConfigError("'users' must be an object");
    reject_unknown(u, {"terrestrial", "aerial", "terrestrial_height_m", "aerial_height_min_m",
                       "aerial_height_max_m"},
                   "users.");
    read(u, "terrestrial", c.terrestrial_users, "users.");
    read(u, "aerial", c.aerial_users, "users.");
    read(u, "terrestrial_height_m", c.terrestrial_user_height_m, "users.");
    read(u, "aerial_height_min_m", c.aerial_height_min_m, "users.");
    read(u, "aerial_height_max_m", c.aerial_height_max_m, "users.");
  }
  if (doc.contains("zones")) {
    const auto& z = doc["zones"];
    if (!z.is_object()) throw ConfigError("'zones' must be an object");
    reject_unknown(z, {"urban_area", "suburban_area", "rural_area", "urban_users",
                       "suburban_users", "rural_users"},
                   "zones.");
    read(z, "urban_area", c.zones.urban_area, "zones.");
    read(z, "suburban_area", c.zones.suburban_area, "zones.");
    read(z, "rural_area", c.zones.rural_area, "zones.");
    read(z, "urban_users", c.zones.urban_users, "zones.");
    read(z, "suburban_users", c.zones.suburban_users, "zones.");
    read(z, "rural_users", c.zones.rural_users, "zones.");
  }
  if (doc.contains("channel")) {
    const auto& ch = doc["channel"];
    if (!ch.is_object()) throw ConfigError("'channel' must be an object");
    reject_unknown(ch, {"carrier_hz", "reference_distance_m", "path_loss_exponent_tbs",
                        "path_loss_exponent_hbs", "shadowing_std_db", "rayleigh_power_db",
                        "rician_k_db"},
                   "channel.");
    read(ch, "carrier_hz", c.channel.carrier_hz, "channel.");
    read(ch, "reference_distance_m", c.channel.reference_distance_m, "channel.");
    read(ch, "path_loss_exponent_tbs", c.channel.path_loss_exponent_tbs, "channel.");
    read(ch, "path_loss_exponent_hbs", c.channel.path_loss_exponent_hbs, "channel.");
    read(ch, "shadowing_std_db", c.channel.shadowing_std_db, "channel.");
    read(ch, "rayleigh_power_db", c.channel.rayleigh_power_db, "channel.");
    read(ch, "rician_k_db", c.channel.rician_k_db, "channel.");
  }
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

// --- Scenario ---------------------------------------------------------------

double Scenario::total_noise_w() const { return noise_power(noise_psd_dbm_hz, bandwidth_hz); }

std::vector<double> Scenario::power_caps_w() const {
  std::vector<double> caps;
  caps.reserve(base_stations.size());
  for (const auto& bs : base_stations) caps.push_back(bs.max_power_w);
  return caps;
}

std::vector<double> Scenario::fronthaul_caps_bpshz() const {
  std::vector<double> caps;
  caps.reserve(base_stations.size());
  for (const auto& bs : base_stations) caps.push_back(bs.fronthaul_bps / bandwidth_hz);
  return caps;
}

Scenario build_scenario(const ScenarioConfig& config) {
  validate(config);
  Scenario s;
  s.area_side_m = config.area_side_m;
  s.bandwidth_hz = config.bandwidth_hz;
  s.tones = config.tones;
  s.noise_psd_dbm_hz = config.noise_psd_dbm_hz;
  s.seed = config.seed;
  s.channel = config.channel;

  const double side = config.area_side_m;
  const Square full{0.0, side};
  const Square urban = centered_square(side, config.zones.urban_area);
  const Square suburban =
      centered_square(side, config.zones.urban_area + config.zones.suburban_area);
  const Square none{0.0, 0.0};

  // Users: terrestrial first, then aerial; zones urban -> suburban -> rural.
  Rng user_rng(config.seed, stream_id(Stream::kPlacement, 0));
  auto place_users = [&](int n, Tier kind) {
    const auto counts = zone_counts(n, config.zones);
    const Square outers[3] = {urban, suburban, full};
    const Square inners[3] = {none, urban, suburban};
    for (int zone = 0; zone < 3; ++zone) {
      for (int i = 0; i < counts[zone]; ++i) {
        User u;
        u.id = static_cast<int>(s.users.size());
        u.kind = kind;
        u.pos = sample_zone(user_rng, outers[zone], inners[zone]);
        u.pos.z = kind == Tier::kTerrestrial
                      ? config.terrestrial_user_height_m
                      : user_rng.uniform(config.aerial_height_min_m, config.aerial_height_max_m);
        s.users.push_back(u);
      }
    }
  };
  place_users(config.terrestrial_users, Tier::kTerrestrial);
  place_users(config.aerial_users, Tier::kAerial);

  Rng tbs_rng(config.seed, stream_id(Stream::kPlacement, 1));
  const auto tbs_pts = grid_points(config.tbs.count, urban.lo, urban.hi - urban.lo,
                                   config.tbs_jitter, &tbs_rng);
  for (const auto& p : tbs_pts) {
    BaseStation bs;
    bs.id = static_cast<int>(s.base_stations.size());
    bs.tier = Tier::kTerrestrial;
    bs.pos = p;
    bs.pos.z = tbs_rng.uniform(config.tbs.height_min_m, config.tbs.height_max_m);
    bs.antennas = config.tbs.antennas;
    bs.max_power_w = dbm_to_watts(config.tbs.max_power_dbm);
    bs.fronthaul_bps = config.tbs.fronthaul_bps;
    s.base_stations.push_back(bs);
  }
  Rng hbs_rng(config.seed, stream_id(Stream::kPlacement, 2));
  const auto hbs_pts = grid_points(config.hbs.count, 0.0, side, 0.0, nullptr);
  for (const auto& p : hbs_pts) {
    BaseStation bs;
    bs.id = static_cast<int>(s.base_stations.size());
    bs.tier = Tier::kAerial;
    bs.pos = p;
    bs.pos.z = hbs_rng.uniform(config.hbs.height_min_m, config.hbs.height_max_m);
    bs.antennas = config.hbs.antennas;
    bs.max_power_w = dbm_to_watts(config.hbs.max_power_dbm);
    bs.fronthaul_bps = config.hbs.fronthaul_bps;
    s.base_stations.push_back(bs);
  }

  for (Tier tier : {Tier::kTerrestrial, Tier::kAerial}) {
    std::vector<int> ids;
    for (const auto& bs : s.base_stations) {
      if (bs.tier == tier) ids.push_back(bs.id);
    }
    const int size = tier == Tier::kTerrestrial ? config.tbs.cluster_size : config.hbs.cluster_size;
    for (auto& members : equal_size_kmeans(s.base_stations, ids, size)) {
      Cluster c;
      c.id = static_cast<int>(s.clusters.size());
      c.tier = tier;
      c.members = std::move(members);
      s.clusters.push_back(std::move(c));
    }
  }

  for (const auto& c : s.clusters) {
    ClusterLayout layout;
    for (int bs : c.members) {
      const int m = s.base_stations[bs].antennas;
      layout.blocks.push_back({bs, layout.dim, m});
      layout.dim += m;
    }
    s.layouts.push_back(std::move(layout));
  }

  check_partition(s);
  return s;
}

void check_partition(const Scenario& s) {
  std::vector<int> owner(s.base_stations.size(), -1);
  size_t total = 0;
  for (const auto& c : s.clusters) {
    total += c.members.size();
    for (int bs : c.members) {
      if (bs < 0 || bs >= s.num_bs()) {
        throw ConfigError("cluster " + std::to_string(c.id) + " references unknown BS " +
                          std::to_string(bs));
      }
      if (owner[bs] >= 0) {
        throw ConfigError("BS " + std::to_string(bs) + " belongs to two clusters");
      }
      owner[bs] = c.id;
      if (s.base_stations[bs].tier != c.tier) {
        throw ConfigError("BS " + std::to_string(bs) + " tier differs from cluster " +
                          std::to_string(c.id));
      }
    }
  }
  if (total != s.base_stations.size()) {
    throw ConfigError("clusters do not cover every base station");
  }
}

std::vector<int> eligible_clusters(int user_id, const Scenario& scenario) {
  if (user_id < 0 || user_id >= scenario.num_users()) {
    throw std::out_of_range("eligible_clusters: unknown user " + std::to_string(user_id));
  }
  const User& u = scenario.users[user_id];
  std::vector<int> out;
  for (const auto& c : scenario.clusters) {
    if (u.kind == Tier::kTerrestrial || c.tier == Tier::kAerial) out.push_back(c.id);
  }
  return out;
}

std::vector<std::vector<int>> eligibility(const Scenario& scenario) {
  std::vector<std::vector<int>> out;
  out.reserve(scenario.users.size());
  for (const auto& u : scenario.users) out.push_back(eligible_clusters(u.id, scenario));
  return out;
}

}  // namespace haps
