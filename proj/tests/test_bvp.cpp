#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sdqi/bvp.hpp"

using namespace sdqi;

namespace {

DobrushinDomain rect63() { return build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.6}); }

// max |F| difference over the nodes of the coarse grid
double max_diff(const SholSolution& coarse, const SholSolution& fine) {
  double m = 0;
  const auto& g = coarse.grid;
  for (std::size_t s = 0; s < g.q.size(); ++s)
    for (std::size_t k = g.k0[s]; k <= g.k1[s]; ++k) {
      const int kf = fine.grid.node(g.y[k]);
      EXPECT_GE(kf, 0);
      m = std::max(m, std::abs(coarse.amplitude(g.q[s], k) - fine.amplitude(g.q[s], static_cast<std::size_t>(kf))));
    }
  return m;
}

}  // namespace

TEST(Bvp, RowsAreSatisfied) {
  auto d = rect63();
  auto s = solve_shol_bvp(d, 0.25);
  EXPECT_EQ(s.unknowns, s.grid.size());
  EXPECT_LT(s.system_residual, 1e-12);
  EXPECT_LT(s.boundary_residual, 1e-12);
  EXPECT_LT(s.normalization_residual, 1e-12);
  const auto kb = static_cast<std::size_t>(s.grid.node(d.b().y));
  EXPECT_LT(std::abs(s.F(d.b().q, kb) - normalization_phase(d) / std::sqrt(d.delta())), 1e-12);
  EXPECT_EQ(s.amplitude(d.q_max() + 1, kb), 0.0);
}

TEST(Bvp, Preconditions) {
  auto d = rect63();
  EXPECT_THROW(solve_shol_bvp(d, 0.3), Error);
  EXPECT_THROW(solve_shol_bvp(build_free_rectangle(4, 2.0, 1.0), 0.25), Error);
}

TEST(Bvp, HolomorphicityResidualIsSecondOrder) {
  auto d = rect63();
  double prev = solve_shol_bvp(d, 1.0 / 16).holo_residual;
  for (double h : {1.0 / 32, 1.0 / 64}) {
    const double r = solve_shol_bvp(d, h).holo_residual;
    EXPECT_GE(std::log2(prev / r), 1.9) << "h_y " << h;
    EXPECT_LE(r, 0.5 * h * h);
    prev = r;
  }
}

TEST(Bvp, RefiningTheGridChangesLittle) {
  auto d = rect63();
  auto s4 = solve_shol_bvp(d, 0.25), s8 = solve_shol_bvp(d, 0.125), s16 = solve_shol_bvp(d, 0.0625);
  const double e1 = max_diff(s4, s8), e2 = max_diff(s8, s16);
  EXPECT_LE(e1, 0.25 * 0.25);
  EXPECT_GT(e1 / e2, 3.0);
}

TEST(Bvp, RowOrderDoesNotMatter) {
  auto d = rect63();
  auto s = solve_shol_bvp(d, 0.125);
  BvpOptions opt;
  opt.reverse_rows = true;
  auto r = solve_shol_bvp(d, 0.125, opt);
  double m = 0, scale = 0;
  for (std::size_t c = 0; c < s.a.size(); ++c)
    for (std::size_t j = 0; j < s.a[c].size(); ++j) {
      m = std::max(m, std::abs(s.a[c][j] - r.a[c][j]));
      scale = std::max(scale, std::abs(s.a[c][j]));
    }
  EXPECT_LE(m, 1e-8 * scale);
}

TEST(Bvp, Linearity) {
  auto d = rect63();
  auto s = solve_shol_bvp(d, 0.25);
  BvpOptions opt;
  opt.norm_target = -2.5;
  auto t = solve_shol_bvp(d, 0.25, opt);
  for (std::size_t c = 0; c < s.a.size(); ++c)
    for (std::size_t j = 0; j < s.a[c].size(); ++j) EXPECT_NEAR(t.a[c][j], -2.5 * s.a[c][j], 1e-11);
}

TEST(Bvp, ProjectionRecoversF) {
  auto d = rect63();
  auto F = solve_shol_bvp(d, 0.25).field();
  const auto& g = F.grid;
  for (std::size_t s = 0; s < g.q.size(); ++s)
    for (std::size_t k = g.k0[s]; k <= g.k1[s]; ++k) {
      const int q = g.q[s];
      for (int side : {-1, 1}) {
        const cplx back = project(medial_observable(F, q + side, k).g, tau_direction(q));
        EXPECT_LT(std::abs(back - F.at(q, k)), 1e-14);
      }
    }
}

TEST(Bvp, LongStripIsFlatInTheMiddle) {
  // the medial observable tends to sqrt(Phi') = 1 in modulus
  const Polygon strip = rectangle(0, 0, 8, 1);
  double prev = 1e9;
  for (double delta : {0.25, 0.125, 0.0625}) {
    auto d = semidiscretize(strip, {0, 0.5}, {8, 0.5}, delta);
    auto F = solve_shol_bvp(d, delta / 4).field();
    const int q = static_cast<int>(std::lround(4 * 4.0 / delta));
    const auto k = static_cast<std::size_t>(F.grid.node(0.5));
    const double err = std::abs(std::abs(medial_observable(F, q, k).g) - 1);
    EXPECT_LT(err, prev) << "delta " << delta;
    prev = err;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(Continuum, StripIsLinear) {
  const Polygon strip = rectangle(0, 0, 8, 1);
  auto R = continuum_reference(strip, {0, 0.5}, {8, 0.5}, 1.0 / 32);
  // the wired arc runs counterclockwise from a, along the bottom
  for (double y : {0.25, 0.5, 0.75}) {
    EXPECT_NEAR(R.h_at(4, y), 1 - y, 1e-6);
    EXPECT_NEAR(std::abs(R.f_at(4, y)), 1.0, 1e-5);
  }
  double lo = 1, hi = 0;
  for (std::size_t i = 0; i < R.hval.size(); ++i)
    if (R.inside[i]) {
      lo = std::min(lo, R.hval[i]);
      hi = std::max(hi, R.hval[i]);
    }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
}

TEST(Continuum, SquareOfFIntegratesToH) {
  const Polygon poly = rectangle(0, 0, 2, 1);
  auto R = continuum_reference(poly, {0, 0.5}, {2, 0.5}, 1.0 / 128);
  // Im of int f^2 dz along x then y, midpoint rule
  const double x0 = 0.5, y0 = 0.3, x1 = 1.5, y1 = 0.7;
  const int n = 400;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double x = x0 + (i + 0.5) * (x1 - x0) / n;
    s += std::pow(R.f_at(x, y0), 2).imag() * (x1 - x0) / n;
  }
  for (int i = 0; i < n; ++i) {
    const double y = y0 + (i + 0.5) * (y1 - y0) / n;
    s += (std::pow(R.f_at(x1, y), 2) * kI).imag() * (y1 - y0) / n;
  }
  EXPECT_NEAR(s, R.h_at(x1, y1) - R.h_at(x0, y0), 2e-3);
  EXPECT_THROW(continuum_reference(rectangle(0, 0, 2.01, 1), {0, 0.5}, {2.01, 0.5}, 1.0 / 128), Error);
  EXPECT_THROW(continuum_reference(poly, {0.5, 0.5}, {2, 0.5}, 1.0 / 128), Error);
}

TEST(Convergence, ErrorsDecreaseAlongTheLadder) {
  const Polygon poly = rectangle(0, 0, 2, 1);
  auto rows = convergence_report(poly, {0, 0.5}, {2, 0.5}, {0.2, 0.1, 0.05}, {0.5, 0.25, 1.5, 0.75}, 1.0 / 128);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].wired_dev, 1e-10);
    EXPECT_LT(rows[i].free_dev, 1e-10);
    EXPECT_GT(rows[i].points, 0u);
    if (i == 0) continue;
    EXPECT_LT(rows[i].sup_err_F, rows[i - 1].sup_err_F);
    EXPECT_LT(rows[i].l2_err_F, rows[i - 1].l2_err_F);
    EXPECT_LT(rows[i].sup_err_H, rows[i - 1].sup_err_H);
  }
  std::ostringstream os;
  write_convergence_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "delta,hy,sup_err_F,l2_err_F,sup_err_H,holo_residual");
  EXPECT_THROW(convergence_report(poly, {0, 0.5}, {2, 0.5}, {0.1, 0.2}, {0.5, 0.25, 1.5, 0.75}, 1.0 / 128), Error);
}
