#include "sdqi/acceptance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>

#include "sdqi/bvp.hpp"
#include "sdqi/fkqi.hpp"
#include "sdqi/observable.hpp"
#include "sdqi/sdca.hpp"

namespace sdqi {

namespace {

struct Check {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [FAIL]";
    }
  }
};

// ---------------------------------------------------------------------------

Check residues() {
  Check c;
  int sums = 0, zeros = 0, bad = 0;
  for (int k = 0; k <= 8; ++k)
    for (int m = -4; m <= 4; ++m) {
      Rational r1 = residue_gkm(k, m, 1), r2 = residue_gkm(k, m, -1);
      ++sums;
      if (r1 + r2 != 0) ++bad;
      if (k == 0 || k % 2 == 0 || k <= 2 * std::abs(m)) {
        ++zeros;
        if (r1 != 0 || r2 != 0) ++bad;
      }
    }
  c.expect(bad == 0, fmt::format("{} residue sums and {} vanishing pairs, {} violations", sums, zeros, bad));
  return c;
}

Check green() {
  Check c;
  const double delta = 1.0;
  const double analytic = green_raw_dt_at_origin(1) - green_raw_dt_at_origin(-1);
  const double e = 1e-4;
  auto dt = [](double t) { return green_raw_dt(0, t); };
  const double rich = (2 * dt(e) - dt(2 * e)) - (2 * dt(-e) - dt(-2 * e));
  c.expect(std::abs(analytic - 1 / delta) <= 1e-6 && std::abs(rich - 1 / delta) <= 1e-6,
           fmt::format("jump {:.3e} (limits), {:.3e} (extrapolated)", analytic - 1, rich - 1));

  std::vector<double> dev;
  for (double r : {10.0, 20.0, 40.0})
    dev.push_back(std::abs(green_raw(static_cast<int>(r), 0).value - (std::log(4 * r) + kEulerGamma) / (2 * kPi)));
  const double f1 = dev[0] / dev[1], f2 = dev[1] / dev[2];
  c.expect(f1 >= 3 && f2 >= 3, fmt::format("asymptotic deviation ratios {:.2f}, {:.2f}", f1, f2));

  Rng rng(77, 0);
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const int m = static_cast<int>(rng() % 13) - 6;
    double t = -6 + 12 * rng.uniform();
    if (m == 0 && std::abs(t) < 0.1) t = 0.5;
    const double lap = green_raw(m + 1, t).value + green_raw(m - 1, t).value - 2 * green_raw(m, t).value +
                       green_raw_dtt(m, t);
    worst = std::max(worst, std::abs(lap));
  }
  c.expect(worst <= 1e-6, fmt::format("Laplacian residual {:.2e} at 20 points", worst));
  return c;
}

Check brownian(std::uint64_t seed) {
  Check c;
  const long n = 1000000;
  for (double eps : {1.0, 0.01}) {
    auto d = column_rectangle(Role::primal, 0, 3, -eps, eps, 1.0);
    Rng rng(seed, eps == 1.0 ? 301 : 302);
    long side = 0;
    for (long i = 0; i < n; ++i) side += simulate_bm(d, 1, 0.0, rng).on_wall ? 1 : 0;
    const double freq = static_cast<double>(side) / static_cast<double>(n);
    // the closed form at eps = 1, its leading term eps^2 at eps = 0.01
    const double target = eps == 1.0 ? 0.540900 : eps * eps;
    const double p = exit_side_probability(1.0, eps);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(n));
    c.expect(std::abs(freq - target) <= 4 * sigma,
             fmt::format("eps={} freq {:.6f} vs {:.6f} ({:.2f} sigma)", eps, freq, target, (freq - target) / sigma));
  }
  return c;
}

double sup_error(const GridFunction& f, const std::function<double(double, double)>& g) {
  double e = 0;
  for (const auto& col : f.cols)
    for (std::size_t j = 0; j < col.y.size(); ++j) e = std::max(e, std::abs(col.v[j].real() - g(col.x, col.y[j])));
  return e;
}

Check dirichlet(std::uint64_t seed) {
  Check c;
  auto hyp = [](double x, double y) { return x * x - y * y; };
  auto rect = column_rectangle(Role::primal, 0, 7, 0.0, 3.3, 1.0);
  double worst = 0;
  for (double h : {0.1, 0.05, 0.025}) worst = std::max(worst, sup_error(solve_dirichlet(rect, hyp, h), hyp) / (h * h));
  c.expect(worst <= 1.0, fmt::format("x^2-y^2 sup error / h^2 = {:.2e}", worst));

  // x^2 - y^2 is reproduced exactly, so the order uses e^{kx} cos(wy), harmonic on delta Z x R
  const double k = 0.5, w = std::sqrt(2 * (std::cosh(k) - 1));
  auto ec = [k, w](double x, double y) { return std::exp(k * x) * std::cos(w * y); };
  auto dual = column_rectangle(Role::dual, 2, 6, -0.5, 2.7, 1.0);
  std::vector<double> err;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) err.push_back(sup_error(solve_dirichlet(dual, ec, h), ec));
  double order = 1e9;
  for (std::size_t i = 1; i < err.size(); ++i) order = std::min(order, std::log2(err[i - 1] / err[i]));
  c.expect(order >= 1.9, fmt::format("min order {:.3f}", order));

  auto g = [](double x, double y) { return x * x - y * y + 0.5 * x * y; };
  auto small = column_rectangle(Role::primal, 0, 5, 0.0, 2.0, 1.0);
  auto f = solve_dirichlet(small, g, 0.05);
  double bmin = 1e300, bmax = -1e300;
  for (const auto& col : f.cols)
    for (std::size_t j = 0; j < col.y.size(); ++j)
      if (col.boundary[j]) {
        bmin = std::min(bmin, col.v[j].real());
        bmax = std::max(bmax, col.v[j].real());
      }
  long outside = 0;
  for (const auto& col : f.cols)
    for (std::size_t j = 0; j < col.y.size(); ++j)
      if (col.v[j].real() < bmin - 1e-12 || col.v[j].real() > bmax + 1e-12) ++outside;
  c.expect(outside == 0, fmt::format("{} nodes outside the boundary range", outside));

  const int n = 100000;
  Rng rng(seed, 401);
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    BmExit e = simulate_bm(small, 2, 1.0, rng);
    const double v = g(small.x(e.col), e.y);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, sigma = std::sqrt((s2 / n - mean * mean) / n);
  const double center = f.interpolate(2, 1.0).real();
  c.expect(std::abs(center - mean) <= 4 * sigma,
           fmt::format("center {:.5f} vs harmonic-measure mean {:.5f} ({:.2f} sigma)", center, mean,
                       (center - mean) / sigma));
  return c;
}

// ---------------------------------------------------------------------------

int run_at(const InterfacePath& p, int q, double y) {
  for (std::size_t i = 0; i < p.runs.size(); ++i) {
    const Run& r = p.runs[i];
    if (r.q == q && std::min(r.y_start, r.y_end) < y && y < std::max(r.y_start, r.y_end)) return static_cast<int>(i);
  }
  return -1;
}

Check combinatorics(std::uint64_t seed) {
  Check c;
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.7});
  const auto p = critical_params(1.0);
  Rng rng(seed, 501);
  int bad = 0;
  for (int s = 0; s < 1000; ++s) {
    auto cfg = sample_ppp(d, p.lambda, p.mu, rng);
    const int l = count_loops(cfg, d);
    const int kw = count_clusters(cfg, d, ClusterSide::primal, Bc::wired_on_arc);
    const int kf = count_clusters(cfg, d, ClusterSide::dual, Bc::wired_on_arc);
    if (l != (kw - 1) + (kf - 1)) ++bad;
  }
  c.expect(bad == 0, fmt::format("Euler identity failed on {} of 1000 configurations", bad));

  // three-column window around mid-edge column 9 at height 2, phases relative to nm
  const double f = 2.75 / 6;
  auto w = build_rectangle_dobrushin(6, 4.0, 1.0, {Side::top, f}, {Side::bottom, f});
  constexpr int W = 7, M = 9, E = 11, P = 8, D = 10;
  constexpr double y0 = 2.0, eps = 0.05, y1 = 1.5;
  using Pts = std::vector<std::pair<int, double>>;
  const cplx O{0, 0}, I1{1, 0}, up = kI, dn = -kI;
  struct Row {
    Pts deaths, bridges;
    std::array<cplx, 6> want;
  };
  const Row rows[] = {
      {{}, {}, {O, O, I1, I1, O, O}},
      {{{P, y0}}, {}, {up, dn, I1, I1, O, O}},
      {{}, {{D, y0}}, {O, O, I1, I1, dn, up}},
      {{}, {{D, y1}}, {O, O, I1, I1, dn, dn}},
      {{{P, y0}}, {{D, y1}}, {up, dn, I1, I1, dn, dn}},
      {{}, {{D, y0}, {D, y1}}, {O, O, I1, O, dn, O}},
      {{{P, y1}}, {}, {up, up, I1, I1, O, O}},
      {{{P, y0}, {P, y1}}, {}, {up, O, I1, O, O, O}},
      {{{P, y1}}, {{D, y0}}, {up, up, I1, I1, dn, up}},
  };
  const LatticePoint pos[] = {{W, y0 + eps}, {W, y0 - eps}, {M, y0 + eps}, {M, y0 - eps}, {E, y0 + eps}, {E, y0 - eps}};
  int matched = 0;
  for (const Row& r : rows) {
    auto path = trace_interface(Configuration::from_points(w, r.deaths, r.bridges), w);
    const int inm = run_at(path, M, y0 + eps);
    if (inm < 0) continue;
    const int ref = path.winding_to_end(static_cast<std::size_t>(inm));
    bool ok = true;
    for (std::size_t i = 0; i < 6; ++i) {
      const int j = run_at(path, pos[i].q, pos[i].y);
      const cplx v = j < 0 ? O : eighth_root(path.winding_to_end(static_cast<std::size_t>(j)) - ref);
      ok = ok && v == r.want[i];
    }
    matched += ok ? 1 : 0;
  }
  c.expect(matched == 9, fmt::format("{} of 9 phase rows reproduced", matched));
  return c;
}

Check observable(std::uint64_t seed, int threads) {
  Check c;
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.6});
  auto grid = make_midedge_grid(d, d.delta() / 4);
  ObservableOptions opt;
  opt.threads = threads;
  auto f = estimate_observable(d, grid, 100000, seed, opt);
  const std::size_t ib = f.point(d.b().q, static_cast<std::size_t>(grid.node(d.b().y)));
  const cplx want = kNu / std::sqrt(d.delta());
  const double err = std::abs(f.estimate(ib) - want);
  c.expect(err <= 1e-12, fmt::format("|F(b) - nu/sqrt(delta)| = {:.1e}", err));
  c.expect(f.max_parallel_defect <= 1e-12, fmt::format("parallel defect {:.1e}", f.max_parallel_defect));
  auto r = sholomorphic_residual(f, d, 1.0);
  c.expect(r.fraction_in_band >= 0.95,
           fmt::format("{:.3f} of {} points in the 3 sigma + h_y^2 band", r.fraction_in_band, r.points.size()));
  return c;
}

Check samplers(std::uint64_t seed) {
  Check c;
  auto d = build_free_rectangle(3, 2.0, 1.0);
  auto p = critical_params(1.0, WeightForm::loop_sqrt2l);
  Rng r1(seed, 701), r2(seed, 702);
  auto is = crossing_probability(d, Direction::horizontal, p, Sampler::importance, 240000, r1);
  auto mc = crossing_probability(d, Direction::horizontal, p, Sampler::mcmc, 520000, r2);
  c.expect(is.ess >= 1e5 && mc.ess >= 1e5, fmt::format("ESS {:.0f} (IS), {:.0f} (MCMC)", is.ess, mc.ess));
  const double sigma = std::hypot(is.sigma, mc.sigma);
  c.expect(std::abs(is.value - mc.value) <= 3 * sigma,
           fmt::format("IS {:.5f} vs MCMC {:.5f} ({:.2f} sigma)", is.value, mc.value, (is.value - mc.value) / sigma));
  return c;
}

Check rsw(std::uint64_t seed) {
  Check c;
  const auto p = critical_params(1.0);
  std::vector<CrossingReport> reps;
  for (int n : {4, 8, 16}) {
    Rng rng(seed, 800 + static_cast<std::uint64_t>(n));
    auto r = second_moment_report(rsw_rectangle(n, 1.0), Direction::horizontal, p, Sampler::mcmc, 1000, rng);
    c.expect(r.p_hat >= 0.05 && r.p_hat <= 0.95, fmt::format("n={} p={:.3f}+-{:.3f}", n, r.p_hat, r.sigma));
    c.expect(r.cs_bound <= r.p_hat + 3 * r.sigma, fmt::format("n={} E[N]^2/E[N^2]={:.3f}", n, r.cs_bound));
    reps.push_back(r);
  }
  for (std::size_t i = 1; i < reps.size(); ++i) {
    const double s = std::hypot(reps[i].sigma, reps[i - 1].sigma);
    const double z = (reps[i].p_hat - reps[i - 1].p_hat) / s;
    c.expect(std::abs(z) <= 5, fmt::format("step {} difference {:.2f} sigma", i, z));
  }
  return c;
}

// at most one increase along the ladder
bool mostly_decreasing(const std::vector<double>& v) {
  int up = 0;
  for (std::size_t i = 1; i < v.size(); ++i) up += v[i] >= v[i - 1] ? 1 : 0;
  return up <= 1 && v.back() < v.front();
}

Check convergence() {
  Check c;
  auto rows = convergence_report(rectangle(0, 0, 2, 1), {0, 0.5}, {2, 0.5}, {0.2, 0.1, 0.05},
                                 {0.5, 0.25, 1.5, 0.75}, 1.0 / 256);
  std::vector<double> ef, eh;
  double bdev = 0;
  for (const auto& r : rows) {
    ef.push_back(r.sup_err_F);
    eh.push_back(r.sup_err_H);
    bdev = std::max({bdev, r.wired_dev, r.free_dev});
  }
  c.expect(mostly_decreasing(ef), fmt::format("F sup errors {:.4f} {:.4f} {:.4f}", ef[0], ef[1], ef[2]));
  c.expect(mostly_decreasing(eh), fmt::format("H sup errors {:.4f} {:.4f} {:.4f}", eh[0], eh[1], eh[2]));
  c.expect(bdev <= 1e-6, fmt::format("H boundary deviation {:.1e}", bdev));
  return c;
}

Check primitive() {
  Check c;
  auto d = build_rectangle_dobrushin(6, 3.0, 1.0, {Side::left, 0.4}, {Side::right, 0.6});
  const double hy = d.delta() / 8;
  auto F = solve_shol_bvp(d, hy).field();
  auto P = accumulate_H(F, d);
  auto r = h_diagnostics(P, F, d);
  c.expect(r.neighbors_defect <= 1e-12, fmt::format("neighbour identity {:.1e}", r.neighbors_defect));
  c.expect(r.rectangle_closure <= 1e-12, fmt::format("loop closure {:.1e}", r.rectangle_closure));
  // the Laplacian sign holds up to the y-discretization, C = 1
  const double tol = hy * hy;
  c.expect(r.min_primal_laplacian >= -tol && r.max_dual_laplacian <= tol,
           fmt::format("primal min {:.2e}, dual max {:.2e}, tol {:.2e}", r.min_primal_laplacian,
                       r.max_dual_laplacian, tol));
  return c;
}

struct Criterion {
  int id;
  const char* name;
  double max_seconds;  // 0: no limit
  std::function<Check()> run;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt, std::ostream* progress) {
  const std::uint64_t seed = opt.seed;
  const std::vector<Criterion> all = {
      {1, "residue oracle", 5, residues},
      {2, "Green's function", 60, green},
      {3, "Brownian motion", 120, [seed] { return brownian(seed); }},
      {4, "Dirichlet solver", 0, [seed] { return dirichlet(seed); }},
      {5, "combinatorics", 0, [seed] { return combinatorics(seed); }},
      {6, "observable", 600, [&opt] { return observable(opt.seed, opt.threads); }},
      {7, "sampler cross-validation", 0, [seed] { return samplers(seed); }},
      {8, "RSW trend", 0, [seed] { return rsw(seed); }},
      {9, "BVP convergence", 600, convergence},
      {10, "primitive identities", 0, primitive},
  };
  std::vector<CriterionResult> out;
  for (const auto& cr : all) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), cr.id) == opt.only.end()) continue;
    CriterionResult r;
    r.id = cr.id;
    r.name = cr.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Check c = cr.run();
      r.pass = c.pass;
      r.detail = c.detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.max_seconds > 0 && r.seconds > cr.max_seconds) {
      r.pass = false;
      r.detail += fmt::format("; over the {:.0f} s budget [FAIL]", cr.max_seconds);
    }
    if (progress) print_result(*progress, r);
    out.push_back(r);
  }
  return out;
}

void print_result(std::ostream& os, const CriterionResult& r) {
  os << fmt::format("criterion {:>2} {:<26} {}  {:7.1f} s  {}\n", r.id, r.name, r.pass ? "PASS" : "FAIL", r.seconds,
                    r.detail)
     << std::flush;
}

}  // namespace sdqi
