#include "doctest.h"

#include "haps/fp_core.hpp"
#include "support.hpp"

#include <cmath>

using namespace haps;
using doctest::Approx;

namespace {

// Two single-antenna links on scalar channels.
struct Toy {
  ChannelSet ch = test::toy_channels(1, 2, 2, 1, 0.1);
  BeamformerSet w{1, 2, 2, ComplexVec::Zero(1)};
  Association z{{0, 1}};
  Toy() {
    ch.h(0, 0, 0) = test::vec({1.0});
    ch.h(0, 0, 1) = test::vec({0.5});
    ch.h(0, 1, 1) = test::vec({1.0});
    ch.h(0, 1, 0) = test::vec({0.5});
    w(0, 0, 0) = test::vec({1.0});
    w(0, 1, 1) = test::vec({1.0});
  }
};

double sum_rate(const ChannelSet& ch, const BeamformerSet& w, const std::vector<Link>& links) {
  double r = 0.0;
  for (double g : sinr_all(ch, w, links)) r += rate(g);
  return r;
}

}  // namespace

TEST_CASE("sinr examples") {
  auto ch = test::toy_channels(1, 1, 1, 1, 0.25);
  BeamformerSet w(1, 1, 1, ComplexVec::Zero(1));
  ch.h(0, 0, 0) = test::vec({{0.3, 0.4}});
  w(0, 0, 0) = test::vec({1.0});  // |h^H w|^2 = 0.25 = noise
  const Association on{{0}}, off{{-1}};
  CHECK(sinr(0, 0, w, on, ch) == Approx(1.0).epsilon(1e-14));
  CHECK(sinr(0, 0, w, off, ch) == 0.0);

  Toy t;
  CHECK(std::abs(sinr(0, 0, t.w, t.z, t.ch) - 1.0 / 0.35) < 1e-12);
  CHECK(std::abs(1.0 / 0.35 - 2.857) < 1e-3);
  const auto g = update_gamma(t.ch, t.w, active_links(t.z));
  CHECK(g[0] == Approx(1.0 / 0.35));
  CHECK(g[1] == Approx(1.0 / 0.35));
}

TEST_CASE("rate examples") {
  CHECK(rate(1.0) == 1.0);
  CHECK(rate(0.0) == 0.0);
  CHECK(rate(3.0) == 2.0);
}

TEST_CASE("update_y examples") {
  auto ch = test::toy_channels(1, 1, 1, 1, 1.0);
  BeamformerSet w(1, 1, 1, ComplexVec::Zero(1));
  ch.h(0, 0, 0) = test::vec({1.0});
  w(0, 0, 0) = test::vec({1.0});
  const std::vector<Link> links = {{0, 0, 0}};
  const auto g = update_gamma(ch, w, links);
  CHECK(g[0] == Approx(1.0));
  const auto y = update_y(ch, w, links, g);
  CHECK(std::abs(y[0] - std::sqrt(2.0) / 2.0) < 1e-15);
  CHECK(std::abs(y[0] - 0.7071) < 1e-4);

  // an unserved user has no link, hence no y
  Toy t;
  t.z.serving[1] = -1;
  CHECK(active_links(t.z).size() == 1);
}

TEST_CASE("f_fp of the zero point is zero") {
  auto ch = test::toy_channels(1, 2, 1, 2, 0.1);
  BeamformerSet w(1, 2, 1, ComplexVec::Zero(2));
  const std::vector<Link> links = {{0, 0, 0}, {0, 1, 0}};
  CHECK(f_fp(ch, w, links, {0.0, 0.0}, {0.0, 0.0}) == 0.0);
}

TEST_CASE("FP tightness and y stationarity on random instances") {
  Rng rng(101, Stream::kScratch);
  for (int trial = 0; trial < 100; ++trial) {
    test::Instance in = test::random_instance(rng, 2, 4, 2);
    if (in.links.empty()) continue;
    const auto g = update_gamma(in.ch, in.w, in.links);
    const auto y = update_y(in.ch, in.w, in.links, g);
    const double f = f_fp(in.ch, in.w, in.links, g, y);
    CHECK(std::abs(f - sum_rate(in.ch, in.w, in.links)) <= 1e-8);

    // y maximizes f for any fixed gamma
    std::vector<double> g_any = g;
    for (double& x : g_any) x = rng.uniform(0.0, 5.0);
    std::vector<Complex> y_any = update_y(in.ch, in.w, in.links, g_any);
    const double h = 1e-5;
    double grad2 = 0.0;
    for (size_t k = 0; k < y_any.size(); ++k) {
      for (Complex dir : {Complex(1, 0), Complex(0, 1)}) {
        auto yp = y_any, ym = y_any;
        yp[k] += h * dir;
        ym[k] -= h * dir;
        const double d = (f_fp(in.ch, in.w, in.links, g_any, yp) -
                          f_fp(in.ch, in.w, in.links, g_any, ym)) / (2 * h);
        grad2 += d * d;
      }
    }
    CHECK(std::sqrt(grad2) <= 1e-8);

    // any other (gamma, y) gives a lower surrogate
    std::vector<Complex> y_pert = y;
    for (auto& v : y_pert) v += rng.complex_normal(0.01);
    CHECK(f_fp(in.ch, in.w, in.links, g, y_pert) <= f + 1e-12);
    CHECK(f_fp(in.ch, in.w, in.links, g_any, y_any) <= f + 1e-12);
    // y step from the perturbed point never loses
    CHECK(f_fp(in.ch, in.w, in.links, g_any, y_any) >=
          f_fp(in.ch, in.w, in.links, g_any, y_pert) - 1e-12);
  }
}

TEST_CASE("update_beta and block ledger") {
  CHECK(update_beta(ComplexVec::Zero(2)) == 1e12);
  CHECK(update_beta(test::vec({1.0})) == Approx(1.0).epsilon(1e-11));
  Rng rng(3, Stream::kScratch);
  for (double eps : {1e-6, 1e-12}) {
    for (int i = 0; i < 200; ++i) {
      const ComplexVec w = test::random_vec(rng, 3, std::pow(10.0, rng.uniform(-8, 2)));
      const double b = update_beta(w, eps);
      CHECK(b <= 1.0 / eps);
      CHECK(b * w.squaredNorm() >= 0.0);
      CHECK(b * w.squaredNorm() < 1.0);
      if (w.squaredNorm() > 1e4 * eps) CHECK(b * w.squaredNorm() > 0.99);
    }
  }
  ClusterLayout layout;
  layout.blocks = {{0, 0, 2}, {1, 2, 2}};
  layout.dim = 4;
  const ComplexVec w = test::vec({1.0, 0.0, 0.0, 0.0});
  const auto betas = block_betas(w, layout);
  CHECK(betas[0] == Approx(1.0));
  CHECK(betas[1] == 1e12);
  const auto pw = block_powers(test::vec({1.0, {0, 2}, 3.0, 0.0}), layout);
  CHECK(pw[0] == Approx(5.0));
  CHECK(pw[1] == Approx(9.0));
}

TEST_CASE("matched filter puts the requested power on each block") {
  ClusterLayout layout;
  layout.blocks = {{0, 0, 2}, {1, 2, 2}};
  layout.dim = 4;
  const ComplexVec h = test::vec({1.0, {0, 1}, 0.0, 0.0});
  const ComplexVec w = matched_filter(h, layout, {2.0, 3.0});
  CHECK(w.segment(0, 2).squaredNorm() == Approx(2.0));
  CHECK(w.segment(2, 2).norm() == 0.0);  // zero channel block gets nothing
  CHECK(std::abs(h.segment(0, 2).dot(w.segment(0, 2))) == Approx(h.segment(0, 2).norm() * std::sqrt(2.0)));
}

TEST_CASE("receiver form collects every listening receiver") {
  Toy t;
  const auto links = active_links(t.z);
  const std::vector<Complex> y = {{0.5, 0.1}, {-0.2, 0.3}};
  const ComplexMat a = receiver_form(t.ch, links, y, 0, 0, 1);
  const double expect = std::norm(y[0]) * 1.0 + std::norm(y[1]) * 0.25;
  CHECK(a(0, 0).real() == Approx(expect));
}

TEST_CASE("probe values for an idle pair") {
  Toy t;
  t.z.serving[1] = -1;
  t.w(0, 1, 1) = ComplexVec::Zero(1);
  const auto links = active_links(t.z);
  const ComplexVec beam = test::vec({2.0});
  const Probe p = probe_values(t.ch, t.w, links, {0, 1, 1}, beam);
  // signal |1*2|^2 = 4, interference from link 0 at user 1: |0.5|^2 = 0.25
  const double gamma = 4.0 / (0.1 + 0.25);
  CHECK(p.gamma == Approx(gamma));
  CHECK(std::abs(p.y - std::sqrt(1.0 + gamma) * 2.0 / (0.1 + 0.25 + 4.0)) < 1e-12);
}

TEST_CASE("association benefit examples") {
  const ComplexMat zero = ComplexMat::Zero(1, 1);
  CHECK(association_benefit(0.0, 0.0, test::vec({0.0}), test::vec({0.0}), zero, 0.1) == 0.0);

  const double g = 1.3, noise = 0.2;
  const Complex y(0.4, -0.1);
  const ComplexVec h = test::vec({{0.7, 0.2}});
  const ComplexVec v = test::vec({{1.1, -0.5}});
  const double hand = std::log2(1 + g) +
                      kBitsPerNat * (-g - std::norm(y) * noise +
                                     2 * std::sqrt(1 + g) * (std::conj(y) * h.dot(v)).real());
  CHECK(association_benefit(g, y, h, v, zero, noise) == Approx(hand).epsilon(1e-14));

  // zero channel: never positive
  Rng rng(8, Stream::kScratch);
  for (int i = 0; i < 500; ++i) {
    const ComplexVec vv = test::random_vec(rng, 2);
    ComplexMat a = ComplexMat::Zero(2, 2);
    const ComplexVec hh = test::random_vec(rng, 2);
    a += hh * hh.adjoint();
    const double alpha = association_benefit(rng.uniform(0, 10), rng.complex_normal(),
                                             ComplexVec::Zero(2), vv, a, 0.1);
    CHECK(alpha <= 0.0);
  }
}

TEST_CASE("update_association examples") {
  const std::vector<std::vector<int>> both = {{0, 1}};
  CHECK(update_association({{0.5, 0.2}}, both).serving[0] == 0);
  CHECK(update_association({{0.2, 0.5}}, both).serving[0] == 1);
  CHECK(update_association({{0.4, 0.4}}, both).serving[0] == 0);
  CHECK(update_association({{-0.1, 0.0}}, both).serving[0] == -1);
  // ineligible cluster is never picked, however attractive
  CHECK(update_association({{9.0, 0.1}}, {{1}}).serving[0] == 1);
  CHECK(update_association({{9.0, -0.1}}, {{1}}).serving[0] == -1);
  CHECK(update_association({{9.0}}, {{}}).serving[0] == -1);

  Rng rng(12, Stream::kScratch);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::vector<double>> a(1, std::vector<double>(4));
    for (double& x : a[0]) x = rng.uniform(-1, 1);
    const std::vector<std::vector<int>> e = {{0, 1, 2, 3}};
    const int pick = update_association(a, e).serving[0];
    const double c = rng.uniform(0.1, 100);
    for (double& x : a[0]) x *= c;
    CHECK(update_association(a, e).serving[0] == pick);
  }
}

TEST_CASE("auxiliary beamformer closed form with a slack cap") {
  const double g = 0.8;
  const Complex y(0.3, 0.2);
  const Complex hs(1.5, -0.4);
  const ComplexVec h = test::vec({hs});
  const ComplexMat a = std::norm(y) * h * h.adjoint();
  const ComplexVec r = std::sqrt(1 + g) * y * h;
  const auto sol = auxiliary_beamformers(a, {r}, test::one_block(0, 1), {1e6});
  const Complex expect = std::sqrt(1 + g) * y * hs / (std::norm(y) * std::norm(hs));
  CHECK(std::abs(sol.v[0](0) - expect) < 1e-12 * std::abs(expect));
  CHECK(sol.eta[0] == 0.0);
}

TEST_CASE("auxiliary beamformer meets a binding cap") {
  const ComplexVec h = test::vec({1.0, 0.5});
  const ComplexMat a = 0.01 * h * h.adjoint();
  const auto sol = auxiliary_beamformers(a, {h}, test::one_block(0, 2), {0.5});
  CHECK(sol.v[0].squaredNorm() == Approx(0.5).epsilon(1e-6));
  CHECK(sol.v[0].squaredNorm() <= 0.5 * (1 + 1e-6));
  CHECK(sol.eta[0] > 0.0);
}

TEST_CASE("auxiliary beamformers are Lagrangian stationary") {
  Rng rng(33, Stream::kScratch);
  for (int trial = 0; trial < 50; ++trial) {
    ClusterLayout layout;
    layout.blocks = {{0, 0, 2}, {1, 2, 2}};
    layout.dim = 4;
    ComplexMat a = ComplexMat::Zero(4, 4);
    for (int i = 0; i < 3; ++i) {
      const ComplexVec hh = test::random_vec(rng, 4);
      a += rng.uniform(0.01, 1.0) * hh * hh.adjoint();
    }
    std::vector<ComplexVec> r;
    for (int k = 0; k < 3; ++k) r.push_back(test::random_vec(rng, 4));
    const std::vector<double> caps = {rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)};
    const auto sol = auxiliary_beamformers(a, r, layout, caps);

    auto lagrangian = [&](const std::vector<ComplexVec>& v) {
      double l = 0.0;
      for (size_t k = 0; k < v.size(); ++k) {
        l += 2 * r[k].dot(v[k]).real() - v[k].dot(a * v[k]).real();
        for (size_t b = 0; b < 2; ++b) l -= sol.eta[b] * v[k].segment(2 * b, 2).squaredNorm();
      }
      return l;
    };
    const double step = 1e-5;
    double grad2 = 0.0;
    for (size_t k = 0; k < r.size(); ++k) {
      for (int i = 0; i < 4; ++i) {
        for (Complex dir : {Complex(1, 0), Complex(0, 1)}) {
          auto vp = sol.v, vm = sol.v;
          vp[k](i) += step * dir;
          vm[k](i) -= step * dir;
          const double d = (lagrangian(vp) - lagrangian(vm)) / (2 * step);
          grad2 += d * d;
        }
      }
    }
    CHECK(std::sqrt(grad2) <= 1e-8);
    for (size_t b = 0; b < 2; ++b) {
      double used = 0.0;
      for (const auto& v : sol.v) used += v.segment(2 * b, 2).squaredNorm();
      CHECK(used <= caps[b] * (1 + 1e-6));
      if (sol.eta[b] > 0.0) CHECK(used == Approx(caps[b]).epsilon(1e-6));
    }
  }
}
