#include "doctest.h"

#include "haps/channel.hpp"
#include "haps/fp_core.hpp"

#include <cmath>
#include <cstdio>

using namespace haps;
using doctest::Approx;

TEST_CASE("path loss examples") {
  const double ref = path_loss_db(Tier::kAerial, 1.0);
  CHECK(std::abs(ref - 38.46) <= 0.01);
  CHECK(path_loss_db(Tier::kTerrestrial, 1.0) == ref);
  CHECK(std::abs(path_loss_db(Tier::kAerial, 10.0) - (ref + 20.0)) < 1e-12);
  CHECK(std::abs(path_loss_db(Tier::kTerrestrial, 10.0) - (ref + 37.6)) < 1e-12);
  CHECK_THROWS_AS(path_loss_db(Tier::kAerial, 0.5), std::invalid_argument);
}

TEST_CASE("path loss grows with distance") {
  for (Tier t : {Tier::kTerrestrial, Tier::kAerial}) {
    double prev = path_loss_db(t, 1.0);
    for (double d = 1.5; d < 1e5; d *= 1.5) {
      const double pl = path_loss_db(t, d);
      CHECK(pl > prev);
      prev = pl;
    }
  }
}

TEST_CASE("HBS line-of-sight limb is deterministic in magnitude") {
  const ChannelParams p;
  const double k = db_to_linear(p.rician_k_db);
  const double g = 3.7e-9;
  Rng rng(5, Stream::kScratch);
  for (int i = 0; i < 20; ++i) {
    const ComplexVec x = draw_block(Tier::kAerial, g, 4, rng, p, {false, false});
    for (int m = 0; m < 4; ++m) CHECK(std::abs(x(m)) == Approx(std::sqrt(g * k / (k + 1.0))).epsilon(1e-14));
    CHECK(std::abs(x(0) - x(3)) < 1e-20);  // common phase
  }
  const ComplexVec t = draw_block(Tier::kTerrestrial, g, 4, rng, p, {false, false});
  CHECK(t.norm() == 0.0);
}

TEST_CASE("small-scale power averages to M") {
  const ChannelParams p;
  for (Tier t : {Tier::kTerrestrial, Tier::kAerial}) {
    Rng rng(21, Stream::kScratch);
    const int n = 100000, m = 2;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += draw_block(t, 1.0, m, rng, p).squaredNorm();
    CHECK(acc / n == Approx(m).epsilon(0.02));
  }
}

TEST_CASE("shadowing is normal in dB with the configured spread") {
  Scenario s = build_scenario(ScenarioConfig::desk_terrestrial());
  // one TBS, many co-located users: only the shadowing draw differs
  s.base_stations.resize(1);
  const User proto = s.users[0];
  const int n = 100000;
  s.users.assign(n, proto);
  const double d = distance(proto.pos, s.base_stations[0].pos);
  const double pl = path_loss_db(Tier::kTerrestrial, std::max(1.0, d), s.channel);
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  int within = 0;
  std::vector<double> xs(n);
  for (int u = 0; u < n; ++u) {
    xs[u] = -10.0 * std::log10(large_scale_gain(s, u, 0)) - pl;
    m1 += xs[u];
  }
  m1 /= n;
  for (double x : xs) {
    const double c = x - m1;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double sd = std::sqrt(m2);
  for (double x : xs) within += std::abs(x - m1) <= sd;
  CHECK(std::abs(m1) < 0.1);
  CHECK(sd == Approx(8.0).epsilon(0.03));
  CHECK(std::abs(m3 / (sd * sd * sd)) < 0.05);          // skewness
  CHECK(std::abs(m4 / (m2 * m2) - 3.0) < 0.1);          // kurtosis
  CHECK(std::abs(static_cast<double>(within) / n - 0.6827) < 0.01);

  ChannelOptions off;
  off.shadowing = false;
  CHECK(-10.0 * std::log10(large_scale_gain(s, 0, 0, off)) == Approx(pl).epsilon(1e-12));
}

TEST_CASE("terrestrial clusters never reach aerial users") {
  const Scenario s = build_scenario(ScenarioConfig::desk_default());
  const ChannelSet ch = draw_channel_set(s);
  int checked = 0;
  for (const User& u : s.users) {
    for (const Cluster& c : s.clusters) {
      const ComplexVec& h = ch.at(u.id, c.id);
      CHECK(h.size() == s.layouts[c.id].dim);
      if (u.kind == Tier::kAerial && c.tier == Tier::kTerrestrial) {
        CHECK(h.norm() == 0.0);
        // no signal or interference whatever the beam
        BeamformerSet w = zero_beams(s, 1);
        w(0, 0, c.id) = ComplexVec::Ones(h.size());
        CHECK(received_power(ch, w, u.id, {0, 0, c.id}) == 0.0);
        ++checked;
      } else {
        CHECK(h.norm() > 0.0);
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("tones share large-scale gains and tone 0 matches the single-carrier draw") {
  auto cfg = ScenarioConfig::desk_default();
  const Scenario s1 = build_scenario(cfg);
  cfg.tones = 4;
  const Scenario s4 = build_scenario(cfg);
  const ChannelSet c1 = draw_channel_set(s1);
  const ChannelSet c4 = draw_channel_set(s4);
  CHECK(c4.noise_w == Approx(c1.noise_w / 4).epsilon(1e-14));
  CHECK(c1.gain == c4.gain);
  for (int u = 0; u < s1.num_users(); ++u) {
    for (int q = 0; q < s1.num_clusters(); ++q) {
      CHECK(c1.at(u, q, 0) == c4.at(u, q, 0));
      CHECK(c1.at(u, q, 0) == draw_channel(s1, u, q, 0));
      if (c4.at(u, q, 0).norm() > 0.0) CHECK(c4.at(u, q, 1) != c4.at(u, q, 2));
    }
  }
}

TEST_CASE("full-scale scenario nonzero entry count") {
  for (int tones : {1, 3}) {
    auto cfg = ScenarioConfig::paper_default();
    cfg.tones = tones;
    const Scenario s = build_scenario(cfg);
    const ChannelSet ch = draw_channel_set(s);
    int qa = 0;
    for (const auto& c : s.clusters) qa += c.tier == Tier::kAerial;
    int nonzero = 0;
    for (const ComplexVec& h : ch.h) nonzero += h.norm() > 0.0;
    CHECK(nonzero == (70 * s.num_clusters() + 30 * qa) * tones);
  }
}

TEST_CASE("strongest cluster is eligible") {
  const Scenario s = build_scenario(ScenarioConfig::desk_default());
  const ChannelSet ch = draw_channel_set(s);
  for (const User& u : s.users) {
    const int q = strongest_cluster(s, ch, u.id);
    REQUIRE(q >= 0);
    for (int other : eligible_clusters(u.id, s)) {
      CHECK(cluster_gain(s, ch, u.id, q) >= cluster_gain(s, ch, u.id, other));
    }
    if (u.kind == Tier::kAerial) CHECK(s.clusters[q].tier == Tier::kAerial);
  }
}

TEST_CASE("channel table round trip") {
  auto cfg = ScenarioConfig::desk_default();
  cfg.tones = 2;
  const Scenario s = build_scenario(cfg);
  const ChannelSet ch = draw_channel_set(s);
  const std::string path = "channels_roundtrip.csv";
  write_channels_csv(ch, path);
  const ChannelSet back = read_channels_csv(s, path);
  std::remove(path.c_str());
  CHECK(back.noise_w == ch.noise_w);
  CHECK(back.gain == ch.gain);
  for (size_t i = 0; i < ch.h.size(); ++i) CHECK(*(ch.h.begin() + i) == *(back.h.begin() + i));
}
