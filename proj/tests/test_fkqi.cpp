#include <gtest/gtest.h>

#include <cmath>

#include "sdqi/fkqi.hpp"

using namespace sdqi;

namespace {

double combined(const Estimate& a, const Estimate& b) { return std::sqrt(sq(a.sigma) + sq(b.sigma)); }

Functional crossing(const DobrushinDomain& d, Direction dir) {
  return [&d, dir](const Configuration& c) { return has_crossing(c, d, dir) ? 1.0 : 0.0; };
}

Functional point_count() {
  return [](const Configuration& c) { return static_cast<double>(c.size()); };
}

}  // namespace

TEST(Params, Critical) {
  auto loop = critical_params(1.0, WeightForm::loop_sqrt2l);
  EXPECT_NEAR(loop.lambda, 0.70711, 1e-5);
  EXPECT_EQ(loop.lambda, loop.mu);
  auto fk = critical_params(1.0);
  EXPECT_DOUBLE_EQ(fk.lambda, 0.5);
  EXPECT_DOUBLE_EQ(fk.mu, 1.0);
  EXPECT_TRUE(fk.critical());
  EXPECT_NEAR(std::sqrt(fk.lambda * fk.mu), loop.lambda, 1e-15);
  auto half = critical_params(0.5);
  EXPECT_DOUBLE_EQ(half.lambda, 2 * fk.lambda);
  EXPECT_DOUBLE_EQ(half.mu, 2 * fk.mu);
  ModelParams off = fk;
  off.mu = 1.5;
  EXPECT_FALSE(off.critical());
  ModelParams bad = loop;
  bad.mu = 1;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Weights, LoopAndClusterFormsDifferByPointCounts) {
  // on free domains l - 2k + #deaths - #bridges is constant, which makes the two
  // weights equal at criticality
  auto d = build_free_rectangle(3, 2.0, 1.0);
  Rng rng(5, 0);
  for (int i = 0; i < 500; ++i) {
    auto c = sample_ppp(d, 0.7, 0.7, rng);
    long v = weight_loops(c, d) - 2L * weight_clusters(c, d, Bc::free) + static_cast<long>(c.n_deaths()) -
             static_cast<long>(c.n_bridges());
    ASSERT_EQ(v, -3) << "sample " << i;
  }
}

TEST(Weights, BridgeAndDeathChangeK) {
  auto d = build_free_rectangle(3, 2.0, 1.0);
  auto p = critical_params(1.0);
  // a bridge joining columns 0 and 1 halves the weight; a death on an isolated column doubles it
  ChainState s = make_chain(d, p, Configuration(d));
  EXPECT_EQ(s.cached_k, 3);
  Configuration one = Configuration::from_points(d, {}, {{2, 1.0}});
  EXPECT_NEAR(log_density(one, d, p) - log_density(s.config, d, p), std::log(p.mu) - std::log(2.0), 1e-12);
  Configuration dead = Configuration::from_points(d, {{0, 1.0}}, {});
  EXPECT_NEAR(log_density(dead, d, p) - log_density(s.config, d, p), std::log(p.lambda) + std::log(2.0), 1e-12);
}

TEST(Mcmc, DetailedBalance) {
  auto d = build_rectangle_dobrushin(3, 1.5, 1.0, {Side::left, 0.5}, {Side::right, 0.5});
  for (WeightForm form : {WeightForm::fk_2k, WeightForm::loop_sqrt2l}) {
    auto p = critical_params(1.0, form, Bc::wired_on_arc);
    const double M = birth_mass(d, p);
    Rng rng(4, 0);
    for (int trial = 0; trial < 50; ++trial) {
      Configuration base = sample_ppp(d, p.lambda, p.mu, rng);
      ChainState s = make_chain(d, p, base);
      // a new point on a random column
      auto cols = d.interior_columns(Role::primal);
      for (int q : d.interior_columns(Role::dual)) cols.push_back(q);
      int q = cols[static_cast<std::size_t>(rng() % cols.size())];
      Interval iv = d.medial(q)->interior;
      double y = iv.lo + iv.length() * rng.uniform();
      Configuration grown = base;
      grown.insert(q, y);
      ChainState t = make_chain(d, p, grown);
      auto& v = grown.events(q);
      std::size_t idx = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), y) - v.begin());
      double nu = mod4(q) == 0 ? p.lambda : p.mu;
      double forward = std::exp(log_density(base, d, p)) * 0.5 * nu / M * birth_acceptance(s, d, p, q, y);
      double backward = std::exp(log_density(grown, d, p)) * 0.5 / static_cast<double>(grown.size()) *
                        death_acceptance(t, d, p, q, idx);
      EXPECT_NEAR(forward / backward, 1.0, 1e-12);
    }
  }
}

TEST(Mcmc, CachesMatchRecount) {
  auto d = build_rectangle_dobrushin(4, 2.0, 1.0, {Side::left, 0.3}, {Side::top, 0.6});
  auto p = critical_params(1.0, WeightForm::fk_2k, Bc::wired_on_arc);
  ChainState s = make_chain(d, p, Configuration(d), true);
  Rng rng(8, 0);
  for (int i = 0; i < 10000; ++i)
    if (mcmc_step(s, d, p, rng)) ASSERT_NO_THROW(verify_caches(s, d, p)) << "step " << i;
  EXPECT_GT(s.accepted, 1000);
  EXPECT_EQ(s.step_count, 10000);
  // untracked chains only keep the weight count
  ChainState u = make_chain(d, p, s.config);
  EXPECT_EQ(u.cached_k, s.cached_k);
  EXPECT_EQ(u.cached_l, -1);
}

TEST(Importance, TrivialCases) {
  auto d = build_free_rectangle(3, 1.0, 1.0);
  auto p = critical_params(1.0);
  Rng rng(1, 0);
  auto one = importance_estimate(d, p, {[](const Configuration&) { return 1.0; }}, 500, rng)[0];
  EXPECT_DOUBLE_EQ(one.value, 1.0);
  EXPECT_DOUBLE_EQ(one.sigma, 0.0);
  // q = 1 is the plain Poisson mean: lambda * 3 + mu * 2
  ModelParams q1 = p;
  q1.q_weight = 1;
  auto e = importance_estimate(d, q1, {point_count()}, 20000, rng)[0];
  EXPECT_NEAR(e.value, 3.5, 4 * e.sigma);
  EXPECT_DOUBLE_EQ(e.ess, 20000);
  EXPECT_THROW(importance_estimate(d, p, {point_count()}, 0, rng), Error);
}

TEST(Importance, DegenerateWeights) {
  auto d = build_free_rectangle(30, 30.0, 1.0);
  ModelParams p = critical_params(1.0);
  p.q_weight = 1e6;
  Rng rng(2, 0);
  EXPECT_THROW(importance_estimate(d, p, {point_count()}, 50, rng), Error);
}

TEST(Mcmc, AgreesWithImportanceOnTinyDomain) {
  auto d = build_free_rectangle(3, 1.0, 1.0);
  auto p = critical_params(1.0);
  std::vector<Functional> fs = {point_count(), crossing(d, Direction::horizontal)};
  Rng r1(10, 0), r2(10, 1);
  auto is = importance_estimate(d, p, fs, 40000, r1);
  auto mc = mcmc_estimate(d, p, fs, 40000, r2);
  for (std::size_t i = 0; i < fs.size(); ++i)
    EXPECT_NEAR(is[i].value, mc[i].value, 3 * combined(is[i], mc[i])) << "functional " << i;
}

TEST(Crossing, TrivialLimits) {
  auto d = build_free_rectangle(4, 2.0, 1.0);
  ModelParams p = critical_params(1.0);
  p.mu = 0;
  Rng rng(3, 0);
  EXPECT_EQ(crossing_probability(d, Direction::horizontal, p, Sampler::importance, 200, rng).value, 0.0);
  p = critical_params(1.0);
  p.lambda = 0;
  EXPECT_EQ(crossing_probability(d, Direction::vertical, p, Sampler::mcmc, 200, rng).value, 1.0);
  auto marked = build_rectangle_dobrushin(4, 2.0, 1.0, {Side::left, 0.5}, {Side::right, 0.5});
  EXPECT_THROW(crossing_probability(marked, Direction::horizontal, p, Sampler::mcmc, 10, rng), Error);
}

TEST(Crossing, FkAndLoopFormsAgree) {
  auto d = build_free_rectangle(3, 2.0, 1.0);
  auto fk = critical_params(1.0);
  auto loop = critical_params(1.0, WeightForm::loop_sqrt2l);
  Rng r1(12, 0), r2(12, 1);
  // importance weights 2^k are heavy tailed, so the FK side uses the chain
  auto a = crossing_probability(d, Direction::horizontal, fk, Sampler::mcmc, 30000, r1);
  auto b = crossing_probability(d, Direction::horizontal, loop, Sampler::importance, 30000, r2);
  EXPECT_NEAR(a.value, b.value, 3 * combined(a, b));
  EXPECT_GT(a.value, 0.05);
  EXPECT_LT(a.value, 0.95);
}

TEST(Crossing, MonotoneInBridgeIntensity) {
  auto d = build_free_rectangle(3, 2.0, 1.0);
  ModelParams lo = critical_params(1.0), hi = lo;
  hi.mu = 2.0;
  Rng r1(13, 0), r2(13, 1);
  auto a = crossing_probability(d, Direction::horizontal, lo, Sampler::importance, 20000, r1);
  auto b = crossing_probability(d, Direction::horizontal, hi, Sampler::importance, 20000, r2);
  EXPECT_GE(b.value, a.value - 3 * combined(a, b));
}

TEST(SecondMoment, CauchySchwarz) {
  auto d = rsw_rectangle(4, 1.0);
  auto p = critical_params(1.0);
  Rng rng(14, 0);
  auto r = second_moment_report(d, Direction::horizontal, p, Sampler::mcmc, 400, rng);
  EXPECT_GT(r.e_n, 0);
  EXPECT_LE(r.cs_bound, r.p_hat + 3 * r.sigma);
  EXPECT_LE(r.e_n * r.e_n, r.e_n2 * (1 + 1e-12));
  ModelParams none = p;
  none.mu = 0;
  auto z = second_moment_report(d, Direction::horizontal, none, Sampler::mcmc, 100, rng);
  EXPECT_EQ(z.e_n, 0.0);
  EXPECT_EQ(z.cs_bound, 0.0);
  EXPECT_THROW(second_moment_report(d, Direction::horizontal, p, Sampler::mcmc, 10, rng, 4), Error);
}

TEST(SecondMoment, PairConnectivityEmpty) {
  // no events: every column is its own cluster, so only a one-column domain could connect
  auto d = rsw_rectangle(4, 1.0);
  Configuration c(d);
  EXPECT_EQ(pair_connectivity(c, d, Direction::horizontal, 8), 0.0);
  // every column spans bottom to top: 9 matching pairs of weight delta^2
  EXPECT_EQ(pair_connectivity(c, d, Direction::vertical, 8), 9.0);
  EXPECT_TRUE(has_crossing(c, d, Direction::vertical));
  EXPECT_FALSE(has_crossing(c, d, Direction::horizontal));
}
