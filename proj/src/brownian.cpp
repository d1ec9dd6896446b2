#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "sdqi/sdca.hpp"

namespace sdqi {

double exit_side_probability(double delta, double epsilon) {
  require(delta > 0 && epsilon > 0, "mesh and half-height must be positive");
  double c = std::cosh(std::sqrt(2.0) * epsilon / delta);
  if (!std::isfinite(c)) return 1.0;
  return (c - 1) / c;
}

BmExit simulate_bm(const ColumnDomain& d, std::size_t col, double y, Rng& rng, int substeps) {
  require(col < d.cols.size() && d.cols[col].interior.contains(y), "Brownian motion must start inside");
  require(substeps >= 1, "substeps must be positive");
  const double dx = d.step() * d.delta / 4;  // jump length
  const double mean_wait = dx * dx;
  std::normal_distribution<double> normal;
  BmExit out;
  double time = 0;
  std::size_t c = col;
  for (;;) {
    const Interval iv = d.cols[c].interior;
    const double lo = iv.lo, hi = iv.hi;
    const double dt0 = sq((hi - lo) / substeps);
    double wait = -mean_wait * std::log(rng.uniform());
    while (wait > 0) {
      double dt = std::min(dt0, wait);
      double yn = y + std::sqrt(dt) * normal(rng);
      bool up = yn >= hi, down = yn <= lo;
      if (!up && !down) {
        // a bridge between two inside points can still have touched a boundary
        double u = rng.uniform();
        double p_hi = std::exp(-2 * (hi - y) * (hi - yn) / dt);
        double p_lo = std::exp(-2 * (y - lo) * (yn - lo) / dt);
        if (u < p_hi)
          up = true;
        else if (u < p_hi + p_lo)
          down = true;
      }
      if (up || down) {
        out.col = c;
        out.y = up ? hi : lo;
        out.on_wall = false;
        out.time = time + dt / 2;
        return out;
      }
      y = yn;
      time += dt;
      wait -= dt;
    }
    int k = static_cast<int>(c) + (rng() & 1 ? 1 : -1);
    if (k < 0 || k >= static_cast<int>(d.cols.size())) fail(ErrorKind::corrupt, "walk left the column range");
    const MedialColumn& nb = d.cols[static_cast<std::size_t>(k)];
    if (nb.interior.contains(y)) {
      c = static_cast<std::size_t>(k);
      continue;
    }
    if (!nb.on_wall(y)) fail(ErrorKind::corrupt, "walk jumped outside the domain");
    out.col = static_cast<std::size_t>(k);
    out.y = y;
    out.on_wall = true;
    out.time = time;
    return out;
  }
}

double HarmonicMeasure::total() const {
  double s = 0;
  for (const auto& a : atoms) s += a.mass;
  for (const auto& b : bins) s += b.mass;
  return s;
}

namespace {

// atoms at both ends of every interior column and equal bins on every wall
HarmonicMeasure skeleton(const ColumnDomain& d, double bin_width) {
  require(bin_width > 0, "bin width must be positive");
  HarmonicMeasure hm;
  for (std::size_t i = 0; i < d.cols.size(); ++i) {
    const auto& c = d.cols[i];
    if (!c.interior.empty()) {
      hm.atoms.push_back({i, c.interior.lo, 0});
      hm.atoms.push_back({i, c.interior.hi, 0});
    }
    for (const auto& w : c.walls) {
      int nb = std::max(1, static_cast<int>(std::ceil(w.length() / bin_width - 1e-9)));
      for (int b = 0; b < nb; ++b)
        hm.bins.push_back({i, w.lo + w.length() * b / nb, w.lo + w.length() * (b + 1) / nb, 0});
    }
  }
  return hm;
}

}  // namespace

HarmonicMeasure harmonic_measure_mc(const ColumnDomain& d, std::size_t col, double y, Rng& rng, int n,
                                    double bin_width) {
  require(n > 0, "need at least one path", ErrorKind::no_samples);
  HarmonicMeasure hm = skeleton(d, bin_width);
  std::vector<double> counts(hm.atoms.size() + hm.bins.size(), 0);
  for (int s = 0; s < n; ++s) {
    BmExit e = simulate_bm(d, col, y, rng);
    std::size_t slot = counts.size();
    if (!e.on_wall) {
      for (std::size_t a = 0; a < hm.atoms.size(); ++a)
        if (hm.atoms[a].col == e.col && hm.atoms[a].y == e.y) slot = a;
    } else {
      for (std::size_t b = 0; b < hm.bins.size(); ++b) {
        const auto& bin = hm.bins[b];
        if (bin.col == e.col && bin.lo <= e.y && e.y <= bin.hi) {
          slot = hm.atoms.size() + b;
          break;
        }
      }
    }
    if (slot == counts.size()) fail(ErrorKind::corrupt, "exit point outside every bin");
    counts[slot] += 1;
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    double p = counts[k] / n;
    (k < hm.atoms.size() ? hm.atoms[k].mass : hm.bins[k - hm.atoms.size()].mass) = p;
    hm.sigma.push_back(std::sqrt(p * (1 - p) / n));
  }
  return hm;
}

GridFunction green_domain(const ColumnDomain& d, std::size_t pole_col, double pole_y, double h) {
  require(d.role == Role::primal || d.role == Role::dual, "Green's functions live on primal or dual domains");
  require(pole_col < d.cols.size() && d.cols[pole_col].interior.contains(pole_y), "pole must be interior");
  const double px = d.x(pole_col);
  auto free = [&](double x, double y) {
    cplx z(x - px, y - pole_y);
    if (std::abs(z) < 1e-14) return green_normalization(d.delta);
    return green_free(z, d.delta, 1e-11).value;
  };
  GridFunction hfun = solve_dirichlet(d, free, h);
  for (auto& c : hfun.cols)
    for (std::size_t j = 0; j < c.y.size(); ++j) c.v[j] = c.boundary[j] ? cplx(0, 0) : free(c.x, c.y[j]) - c.v[j];
  return hfun;
}

HarmonicMeasure harmonic_measure_green(const ColumnDomain& d, std::size_t col, double y, double h,
                                       double bin_width) {
  HarmonicMeasure hm = skeleton(d, bin_width);
  GridFunction g = green_domain(d, col, y, h);
  const double dx = d.step() * d.delta / 4;
  // column ends: +-dx times the one-sided vertical derivative
  for (auto& a : hm.atoms) {
    const auto& c = g.cols[a.col];
    int j = g.node(a.col, a.y);
    bool top = j == static_cast<int>(c.y.size()) - 1 || c.y[static_cast<std::size_t>(j) + 1] > d.cols[a.col].interior.hi;
    auto ju = static_cast<std::size_t>(j);
    std::size_t j1 = top ? ju - 1 : ju + 1, j2 = top ? ju - 2 : ju + 2;
    double h1 = std::abs(c.y[j1] - c.y[ju]), h2 = std::abs(c.y[j2] - c.y[j1]);
    // one-sided second-order derivative away from the end, pointing inwards
    double w0 = -(2 * h1 + h2) / (h1 * (h1 + h2)), w1 = (h1 + h2) / (h1 * h2), w2 = -h1 / (h2 * (h1 + h2));
    double inward = w0 * c.v[ju].real() + w1 * c.v[j1].real() + w2 * c.v[j2].real();
    a.mass = -dx * inward;
  }
  // walls: density -G(interior neighbour)/dx integrated over each bin
  for (auto& b : hm.bins) {
    double mass = 0;
    for (int side : {-1, 1}) {
      int k = static_cast<int>(b.col) + side;
      if (k < 0 || k >= static_cast<int>(d.cols.size())) continue;
      auto ku = static_cast<std::size_t>(k);
      const Interval iv = d.cols[ku].interior;
      double lo = std::max(b.lo, iv.lo), hi = std::min(b.hi, iv.hi);
      if (!(lo < hi)) continue;
      std::vector<double> pts = {lo, hi};
      for (double yy : g.cols[ku].y)
        if (lo < yy && yy < hi) pts.push_back(yy);
      std::sort(pts.begin(), pts.end());
      for (std::size_t p = 0; p + 1 < pts.size(); ++p)
        mass += 0.5 * (g.interpolate(ku, pts[p]).real() + g.interpolate(ku, pts[p + 1]).real()) *
                (pts[p + 1] - pts[p]);
    }
    b.mass = -mass / dx;
  }
  return hm;
}

}  // namespace sdqi
