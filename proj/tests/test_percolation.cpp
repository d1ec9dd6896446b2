#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "sdqi/percolation.hpp"

using namespace sdqi;

namespace {

// a on the top side and b on the bottom side of a 6-column rectangle, both on
// mid-edge column 9, so the empty interface runs straight down that column.
DobrushinDomain straight_domain() {
  double f = 2.75 / 6;
  return build_rectangle_dobrushin(6, 4.0, 1.0, {Side::top, f}, {Side::bottom, f});
}

// index of the run of the path covering (q, y), or -1
int run_at(const InterfacePath& p, int q, double y) {
  for (std::size_t i = 0; i < p.runs.size(); ++i) {
    const sdqi::Run& r = p.runs[i];
    if (r.q == q && std::min(r.y_start, r.y_end) < y && y < std::max(r.y_start, r.y_end)) return static_cast<int>(i);
  }
  return -1;
}

// dual picture of a Dobrushin domain: shift by half a mesh, swap primal/dual and a/b
DobrushinDomain dual_domain(const DobrushinDomain& d) {
  std::vector<BoundaryEdge> e;
  for (auto edge : d.boundary()) {
    edge.from.q += 2;
    edge.to.q += 2;
    switch (edge.arc) {
      case Arc::wired: edge.arc = Arc::free; break;
      case Arc::free: edge.arc = Arc::wired; break;
      case Arc::mark_a: edge.arc = Arc::mark_b; break;
      case Arc::mark_b: edge.arc = Arc::mark_a; break;
    }
    e.push_back(edge);
  }
  return DobrushinDomain(d.delta(), e);
}

Configuration shift_config(const Configuration& c, const DobrushinDomain& from, const DobrushinDomain& to) {
  Configuration out(to);
  for (int q = from.q_min(); q <= from.q_max(); q += 2) out.events(q + 2) = c.events(q);
  out.validate(to);
  return out;
}

int total_pieces(const Configuration& c, const DobrushinDomain& d) {
  int n = 0;
  for (int q : d.midedge_columns()) {
    n += 1;
    for (int s : {q - 1, q + 1})
      if (c.has_column(s)) n += static_cast<int>(c.events(s).size());
  }
  return n;
}

}  // namespace

TEST(Sample, ZeroIntensitiesGiveEmptyConfiguration) {
  auto d = straight_domain();
  Rng rng(1, 0);
  EXPECT_EQ(sample_ppp(d, 0, 0, rng).size(), 0u);
}

TEST(Sample, PoissonMeanAndVariance) {
  auto d = straight_domain();
  double lp = 0, ld = 0;
  for (int q : d.interior_columns(Role::primal)) lp += d.medial(q)->interior.length();
  for (int q : d.interior_columns(Role::dual)) ld += d.medial(q)->interior.length();
  const double lambda = 0.7, mu = 1.3;
  const int n = 100000;
  Rng rng(7, 3);
  double s1 = 0, s2 = 0, b1 = 0, b2 = 0;
  for (int i = 0; i < n; ++i) {
    auto c = sample_ppp(d, lambda, mu, rng);
    double k = static_cast<double>(c.n_deaths()), b = static_cast<double>(c.n_bridges());
    s1 += k;
    s2 += k * k;
    b1 += b;
    b2 += b * b;
  }
  double mean = s1 / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, lambda * lp, 4 * std::sqrt(lambda * lp / n));
  double bmean = b1 / n, bvar = b2 / n - bmean * bmean;
  // variance of the sample variance of a Poisson(m) is about (m + 2m^2)/n
  double m = mu * ld;
  EXPECT_NEAR(bvar, m, 4 * std::sqrt((m + 2 * m * m) / n));
  EXPECT_NEAR(var, lambda * lp, 4 * std::sqrt((lambda * lp + 2 * sq(lambda * lp)) / n));
}

TEST(Configuration, RejectsTiesAndOutsidePoints) {
  auto d = straight_domain();
  EXPECT_THROW(Configuration::from_points(d, {{8, 1.0}}, {{10, 1.0}}), Error);
  EXPECT_THROW(Configuration::from_points(d, {{8, 4.5}}, {}), Error);
  EXPECT_THROW(Configuration::from_points(d, {{10, 1.0}}, {}), Error);
  EXPECT_NO_THROW(Configuration::from_points(d, {{8, 1.0}}, {{10, 1.5}}));
}

TEST(Configuration, DumpRoundTripIsBitExact) {
  auto d = straight_domain();
  Rng rng(11, 0);
  auto c = sample_ppp(d, 1.1, 2.2, rng);
  std::stringstream ss;
  write_configuration(ss, c, d);
  auto back = read_configuration(ss, d);
  EXPECT_TRUE(back == c);
  std::stringstream again;
  write_configuration(again, back, d);
  std::stringstream first;
  write_configuration(first, c, d);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Clusters, SmallExamples) {
  auto d = build_free_rectangle(5, 2.0, 1.0);
  const int n = static_cast<int>(d.interior_columns(Role::primal).size());
  ASSERT_EQ(n, 5);
  Configuration empty(d);
  EXPECT_EQ(count_clusters(empty, d, ClusterSide::primal, Bc::free), n);
  auto one_bridge = Configuration::from_points(d, {}, {{2, 1.0}});
  EXPECT_EQ(count_clusters(one_bridge, d, ClusterSide::primal, Bc::free), n - 1);
  auto one_death = Configuration::from_points(d, {{4, 1.0}}, {});
  EXPECT_EQ(count_clusters(one_death, d, ClusterSide::primal, Bc::free), n + 1);
}

TEST(Clusters, WiredArcMergesAttachedColumns) {
  auto d = straight_domain();
  Configuration empty(d);
  // every primal column touches the wired arc at one end except those wholly on the free side
  int k = count_clusters(empty, d, ClusterSide::primal, Bc::wired_on_arc);
  int kf = count_clusters(empty, d, ClusterSide::primal, Bc::free);
  EXPECT_LT(k, kf);
  EXPECT_GE(k, 1);
}

TEST(Connected, Basics) {
  auto d = build_free_rectangle(4, 2.0, 1.0);
  Configuration empty(d);
  EXPECT_TRUE(connected(empty, d, {4, 0.3}, {4, 0.3}));
  EXPECT_TRUE(connected(empty, d, {4, 0.3}, {4, 1.7}));
  EXPECT_FALSE(connected(empty, d, {4, 0.3}, {8, 0.3}));
  EXPECT_THROW(connected(empty, d, {4, 0.3}, {40, 0.3}), Error);
}

TEST(Connected, CaptionConfiguration) {
  // x and y joined through a bridge; z above a death on y's column
  auto d = build_free_rectangle(3, 2.0, 1.0);
  auto c = Configuration::from_points(d, {{4, 1.0}}, {{2, 0.5}});
  LatticePoint x{0, 0.2}, y{4, 0.3}, z{4, 1.5};
  EXPECT_TRUE(connected(c, d, x, y));
  EXPECT_FALSE(connected(c, d, x, z));
  EXPECT_FALSE(connected(c, d, y, z));
}

TEST(Connected, IsAnEquivalenceRelation) {
  auto d = build_free_rectangle(5, 3.0, 1.0);
  Rng rng(5, 1);
  auto prim = d.interior_columns(Role::primal);
  auto pick = [&]() {
    int q = prim[static_cast<std::size_t>(rng() % prim.size())];
    Interval iv = d.medial(q)->interior;
    return LatticePoint{q, iv.lo + iv.length() * rng.uniform()};
  };
  for (int s = 0; s < 200; ++s) {
    auto c = sample_ppp(d, 0.5, 1.0, rng);
    auto x = pick(), y = pick(), z = pick();
    EXPECT_TRUE(connected(c, d, x, x));
    EXPECT_EQ(connected(c, d, x, y), connected(c, d, y, x));
    if (connected(c, d, x, y) && connected(c, d, y, z)) EXPECT_TRUE(connected(c, d, x, z));
  }
}

TEST(Loops, EmptyConfigurationHasOnlyTheInterface) {
  auto d = straight_domain();
  Configuration empty(d);
  auto all = trace_all(empty, d);
  EXPECT_EQ(count_loops(empty, d), static_cast<int>(all.loops.size()));
  ASSERT_TRUE(all.interface.has_value());
  ASSERT_EQ(all.interface->runs.size(), 1u);
  EXPECT_EQ(all.interface->runs[0].q, 9);
  EXPECT_EQ(all.interface->runs[0].dir, VDir::down);
  EXPECT_EQ(all.interface->total_winding, 0);
}

TEST(Loops, EmptyRectangleSideToSide) {
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.5}, {Side::right, 0.5});
  Configuration empty(d);
  auto all = trace_all(empty, d);
  EXPECT_EQ(all.loops.size(), 0u);
  // zigzag between the free top and the wired bottom: it leaves a heading up,
  // reaches b heading down, and every up-down pair turns clockwise
  EXPECT_EQ(all.interface->total_winding, -2);
  EXPECT_EQ(all.interface->runs.front().dir, VDir::up);
  EXPECT_EQ(all.interface->runs.back().dir, VDir::down);
}

TEST(Loops, EulerIdentityOnDobrushinRectangle) {
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.7});
  Rng rng(2024, 0);
  const double params[][2] = {{0.5, 1.0}, {1.0, 2.0}, {2.0, 0.5}, {0.2, 3.0}};
  for (int s = 0; s < 1000; ++s) {
    const auto& p = params[s % 4];
    auto c = sample_ppp(d, p[0], p[1], rng);
    auto all = trace_all(c, d);
    int kw = count_clusters(c, d, ClusterSide::primal, Bc::wired_on_arc);
    int kf = count_clusters(c, d, ClusterSide::dual, Bc::wired_on_arc);
    ASSERT_EQ(static_cast<int>(all.loops.size()), (kw - 1) + (kf - 1)) << "sample " << s;
    int runs = static_cast<int>(all.interface->runs.size());
    for (const auto& l : all.loops) runs += static_cast<int>(l.runs.size());
    ASSERT_EQ(runs, total_pieces(c, d));
  }
}

TEST(Loops, EulerIdentityWithFreeBoundary) {
  auto d = build_free_rectangle(5, 3.0, 1.0);
  Rng rng(99, 0);
  for (int s = 0; s < 500; ++s) {
    auto c = sample_ppp(d, 0.8, 1.6, rng);
    int l = count_loops(c, d);
    int k = count_clusters(c, d, ClusterSide::primal, Bc::free);
    int ks = count_clusters(c, d, ClusterSide::dual, Bc::wired_on_arc);
    ASSERT_EQ(l, k + ks - 1) << "sample " << s;
  }
}

TEST(Interface, RunsFollowColumnOrientation) {
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.7});
  Rng rng(3, 0);
  std::map<int, int> residue;  // winding to b mod 4 at the first run on each column
  for (int s = 0; s < 300; ++s) {
    auto c = sample_ppp(d, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), rng);
    auto all = trace_all(c, d);
    for (const auto* p : {&*all.interface}) {
      for (std::size_t i = 0; i < p->runs.size(); ++i) {
        const sdqi::Run& r = p->runs[i];
        EXPECT_EQ(r.dir, mod4(r.q) == 1 ? VDir::down : VDir::up);
        if (i > 0) EXPECT_EQ(std::abs(r.winding - p->runs[i - 1].winding), 2);
        // exp(iW/2) at a fixed mid-edge is determined up to sign
        int w = ((p->winding_to_end(i) % 4) + 4) % 4;
        auto [it, fresh] = residue.emplace(mod4(r.q), w);
        if (!fresh) EXPECT_EQ(it->second, w);
      }
    }
    for (const auto& l : all.loops)
      for (const auto& r : l.runs) EXPECT_EQ(r.dir, mod4(r.q) == 1 ? VDir::down : VDir::up);
  }
}

TEST(Interface, ReversalNegatesWindings) {
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.7});
  auto dd = dual_domain(d);
  Rng rng(17, 0);
  for (int s = 0; s < 200; ++s) {
    auto c = sample_ppp(d, 0.7, 0.7, rng);
    auto p = trace_interface(c, d);
    auto r = trace_interface(shift_config(c, d, dd), dd);
    ASSERT_EQ(p.runs.size(), r.runs.size());
    EXPECT_EQ(r.total_winding, -p.total_winding);
    const std::size_t n = p.runs.size();
    for (std::size_t j = 0; j < n; ++j) {
      const sdqi::Run& a = p.runs[n - 1 - j];
      const sdqi::Run& b = r.runs[j];
      EXPECT_EQ(b.q, a.q + 2);
      EXPECT_EQ(b.y_start, a.y_end);
      EXPECT_EQ(b.y_end, a.y_start);
      EXPECT_EQ(b.winding, a.winding - p.total_winding);
    }
  }
}

// Phase contributions in a three-column window around the middle column m = 9
// at height y0 = 2, relative to the north-middle position.
class Table1 : public ::testing::Test {
 protected:
  DobrushinDomain d = straight_domain();
  static constexpr int W = 7, M = 9, E = 11, P = 8, D = 10;
  static constexpr double y0 = 2.0, eps = 0.05, y1 = 1.5;

  std::map<std::string, cplx> phases(const std::vector<std::pair<int, double>>& deaths,
                                     const std::vector<std::pair<int, double>>& bridges) {
    auto c = Configuration::from_points(d, deaths, bridges);
    auto path = trace_interface(c, d);
    int inm = run_at(path, M, y0 + eps);
    EXPECT_GE(inm, 0);
    int ref = path.winding_to_end(static_cast<std::size_t>(inm));
    std::map<std::string, cplx> out;
    const std::pair<const char*, LatticePoint> pos[] = {{"nw", {W, y0 + eps}}, {"sw", {W, y0 - eps}},
                                                        {"nm", {M, y0 + eps}}, {"sm", {M, y0 - eps}},
                                                        {"ne", {E, y0 + eps}}, {"se", {E, y0 - eps}}};
    for (auto& [name, pt] : pos) {
      int i = run_at(path, pt.q, pt.y);
      out[name] = i < 0 ? cplx{0, 0} : eighth_root(path.winding_to_end(static_cast<std::size_t>(i)) - ref);
    }
    return out;
  }

  void expect_row(const std::map<std::string, cplx>& got, std::vector<cplx> want) {
    const char* names[] = {"nw", "sw", "nm", "sm", "ne", "se"};
    for (int i = 0; i < 6; ++i)
      EXPECT_LT(std::abs(got.at(names[i]) - want[static_cast<std::size_t>(i)]), 1e-15) << names[i];
  }
};

TEST_F(Table1, Rows) {
  ASSERT_EQ(d.a().q, M);
  ASSERT_EQ(d.b().q, M);
  const cplx O{0, 0}, I1{1, 0}, up = kI, dn = -kI;
  // class 1: nothing brings the interface back
  expect_row(phases({}, {}), {O, O, I1, I1, O, O});
  expect_row(phases({{P, y0}}, {}), {up, dn, I1, I1, O, O});
  expect_row(phases({}, {{D, y0}}), {O, O, I1, I1, dn, up});
  // class 2: a bridge below the window sends it back up the east column
  expect_row(phases({}, {{D, y1}}), {O, O, I1, I1, dn, dn});
  expect_row(phases({{P, y0}}, {{D, y1}}), {up, dn, I1, I1, dn, dn});
  expect_row(phases({}, {{D, y0}, {D, y1}}), {O, O, I1, O, dn, O});
  // class 3: a death below the window sends it back up the west column
  expect_row(phases({{P, y1}}, {}), {up, up, I1, I1, O, O});
  expect_row(phases({{P, y0}, {P, y1}}, {}), {up, O, I1, O, O, O});
  expect_row(phases({{P, y1}}, {{D, y0}}), {up, up, I1, I1, dn, up});
}

TEST(Render, SvgIsDeterministic) {
  auto d = straight_domain();
  Rng r1(4, 0), r2(4, 0);
  auto c1 = sample_ppp(d, 1, 1, r1), c2 = sample_ppp(d, 1, 1, r2);
  auto s1 = render_svg(c1, d, trace_all(c1, d)), s2 = render_svg(c2, d, trace_all(c2, d));
  EXPECT_EQ(s1, s2);
  EXPECT_NE(s1.find("class=\"interface\""), std::string::npos);
}
