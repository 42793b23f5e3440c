#include "doctest.h"

#include "haps/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

using namespace haps;

namespace {

int count_tier(const Scenario& s, Tier t) {
  return static_cast<int>(std::count_if(s.base_stations.begin(), s.base_stations.end(),
                                        [&](const BaseStation& b) { return b.tier == t; }));
}

int count_kind(const Scenario& s, Tier t) {
  return static_cast<int>(std::count_if(s.users.begin(), s.users.end(),
                                        [&](const User& u) { return u.kind == t; }));
}

void check_invariants(const Scenario& s) {
  CHECK_NOTHROW(check_partition(s));
  for (const auto& b : s.base_stations) {
    if (b.tier == Tier::kTerrestrial) CHECK((b.pos.z >= 0.0 && b.pos.z <= 50.0));
    if (b.tier == Tier::kAerial) CHECK(b.pos.z <= 2000.0);
    CHECK(b.antennas >= 1);
    CHECK(b.max_power_w > 0.0);
    CHECK(b.fronthaul_bps > 0.0);
    CHECK((b.pos.x >= 0.0 && b.pos.x <= s.area_side_m && b.pos.y >= 0.0 && b.pos.y <= s.area_side_m));
  }
  for (const auto& u : s.users) {
    if (u.kind == Tier::kAerial) CHECK(u.pos.z <= 100.0);
    if (u.kind == Tier::kTerrestrial) CHECK(u.pos.z == 1.5);
  }
  for (size_t q = 0; q < s.clusters.size(); ++q) {
    int dim = 0;
    for (const Block& b : s.layouts[q].blocks) {
      CHECK(b.offset == dim);
      dim += b.size;
    }
    CHECK(dim == s.layouts[q].dim);
  }
}

}  // namespace

TEST_CASE("full-scale default counts") {
  const Scenario s = build_scenario(ScenarioConfig::paper_default());
  CHECK(s.num_bs() == 48);
  CHECK(count_tier(s, Tier::kTerrestrial) == 18);
  CHECK(count_tier(s, Tier::kAerial) == 30);
  CHECK(s.num_users() == 100);
  CHECK(count_kind(s, Tier::kTerrestrial) == 70);
  CHECK(count_kind(s, Tier::kAerial) == 30);
  CHECK(s.num_clusters() == 8);
  CHECK(s.area_side_m * s.area_side_m == doctest::Approx(300e6));
  check_invariants(s);
}

TEST_CASE("desk default counts") {
  const Scenario s = build_scenario(ScenarioConfig::desk_default());
  CHECK(s.num_bs() == 12);
  CHECK(s.num_clusters() == 4);
  for (const auto& c : s.clusters) CHECK(c.members.size() == 3);
  CHECK(s.num_users() == 20);
  check_invariants(s);
}

TEST_CASE("build is deterministic per seed") {
  auto cfg = ScenarioConfig::desk_default();
  cfg.seed = 17;
  const Scenario a = build_scenario(cfg);
  const Scenario b = build_scenario(cfg);
  REQUIRE(a.num_users() == b.num_users());
  for (int u = 0; u < a.num_users(); ++u) {
    CHECK(a.users[u].pos.x == b.users[u].pos.x);
    CHECK(a.users[u].pos.y == b.users[u].pos.y);
    CHECK(a.users[u].pos.z == b.users[u].pos.z);
  }
  for (int i = 0; i < a.num_bs(); ++i) {
    CHECK(a.base_stations[i].pos.x == b.base_stations[i].pos.x);
    CHECK(a.base_stations[i].pos.z == b.base_stations[i].pos.z);
  }
  for (int q = 0; q < a.num_clusters(); ++q) CHECK(a.clusters[q].members == b.clusters[q].members);

  cfg.seed = 18;
  const Scenario c = build_scenario(cfg);
  CHECK(c.users[0].pos.x != a.users[0].pos.x);
}

TEST_CASE("users follow the zone split") {
  auto cfg = ScenarioConfig::desk_default();
  cfg.terrestrial_users = 1000;
  cfg.aerial_users = 0;
  const Scenario s = build_scenario(cfg);
  // urban square is the centered 20% of the area
  const double half = 0.5 * s.area_side_m * std::sqrt(0.2);
  const double c = 0.5 * s.area_side_m;
  int urban = 0;
  for (const auto& u : s.users) {
    if (std::abs(u.pos.x - c) <= half && std::abs(u.pos.y - c) <= half) ++urban;
  }
  CHECK(urban == 600);
  // TBSs sit inside the urban square
  for (const auto& b : s.base_stations) {
    if (b.tier == Tier::kTerrestrial) {
      CHECK(std::abs(b.pos.x - c) <= half);
      CHECK(std::abs(b.pos.y - c) <= half);
    }
  }
}

TEST_CASE("clusters keep tiers apart") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = ScenarioConfig::paper_default();
    cfg.seed = seed;
    const Scenario s = build_scenario(cfg);
    std::set<int> seen;
    for (const auto& c : s.clusters) {
      for (int b : c.members) {
        CHECK(s.base_stations[b].tier == c.tier);
        CHECK(seen.insert(b).second);
      }
    }
    CHECK(static_cast<int>(seen.size()) == s.num_bs());
    // terrestrial clusters first
    CHECK(s.clusters.front().tier == Tier::kTerrestrial);
    CHECK(s.clusters.back().tier == Tier::kAerial);
  }
}

TEST_CASE("eligible clusters") {
  auto cfg = ScenarioConfig::desk_default();
  cfg.tbs.count = 9;
  cfg.hbs.count = 9;
  const Scenario s = build_scenario(cfg);
  REQUIRE(s.num_clusters() == 6);
  std::vector<int> aerial_ids, all_ids;
  for (const auto& c : s.clusters) {
    all_ids.push_back(c.id);
    if (c.tier == Tier::kAerial) aerial_ids.push_back(c.id);
  }
  REQUIRE(aerial_ids.size() == 3);
  for (const auto& u : s.users) {
    const auto e = eligible_clusters(u.id, s);
    if (u.kind == Tier::kAerial) {
      CHECK(e == aerial_ids);
      for (int q : e) CHECK(s.clusters[q].tier == Tier::kAerial);
    } else {
      CHECK(e == all_ids);
    }
  }
  CHECK_THROWS_AS(eligible_clusters(-1, s), std::out_of_range);
  CHECK_THROWS_AS(eligible_clusters(s.num_users(), s), std::out_of_range);

  const Scenario t = build_scenario(terrestrial_only(ScenarioConfig::desk_default()));
  for (const auto& u : t.users) {
    if (u.kind == Tier::kAerial) CHECK(eligible_clusters(u.id, t).empty());
  }
}

TEST_CASE("partition violations are reported") {
  Scenario s = build_scenario(ScenarioConfig::desk_default());
  Scenario dup = s;
  dup.clusters[0].members.push_back(dup.clusters[1].members[0]);
  CHECK_THROWS_AS(check_partition(dup), ConfigError);
  Scenario missing = s;
  missing.clusters[0].members.pop_back();
  CHECK_THROWS_AS(check_partition(missing), ConfigError);
  Scenario mixed = s;
  std::swap(mixed.clusters.front().members[0], mixed.clusters.back().members[0]);
  CHECK_THROWS_AS(check_partition(mixed), ConfigError);
}

TEST_CASE("validation lists every problem") {
  auto cfg = ScenarioConfig::desk_default();
  cfg.tones = 0;
  cfg.bandwidth_hz = -1.0;
  cfg.tbs.cluster_size = 4;  // 6 TBSs do not split into 4s
  cfg.aerial_height_max_m = 300.0;
  try {
    validate(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("tones") != std::string::npos);
    CHECK(msg.find("bandwidth_hz") != std::string::npos);
    CHECK(msg.find("aerial heights") != std::string::npos);
    CHECK(msg.find("tbs") != std::string::npos);
  }
  CHECK_THROWS_AS(build_scenario(cfg), ConfigError);
}

TEST_CASE("config JSON round trip and schema errors") {
  auto cfg = ScenarioConfig::desk_default();
  cfg.seed = 99;
  cfg.tones = 4;
  cfg.hbs.max_power_dbm = 20.0;
  const ScenarioConfig back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  auto doc = to_json(cfg);
  doc["tbs"]["colour"] = "red";
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = to_json(cfg);
  doc["tones"] = "four";
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = to_json(cfg);
  doc["tones"] = -2;
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);

  // missing keys keep their defaults
  const ScenarioConfig partial = config_from_json(
      nlohmann::json{{"seed", 5}, {"tbs", {{"count", 3}}}, {"users", {{"terrestrial", 3}}}});
  CHECK(partial.seed == 5);
  CHECK(partial.terrestrial_users == 3);
  CHECK(partial.bandwidth_hz == 10e6);
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  const std::string path = "scenario_bad.json";
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path), ConfigError);
  std::remove(path.c_str());
}
