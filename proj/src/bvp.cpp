#include "sdqi/bvp.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>

namespace sdqi {

double SholSolution::amplitude(int q, std::size_t k) const {
  int s = grid.slot(q);
  if (s < 0) return 0;
  auto su = static_cast<std::size_t>(s);
  if (k < grid.k0[su] || k > grid.k1[su]) return 0;
  return a[su][k - grid.k0[su]];
}

cplx SholSolution::F(int q, std::size_t k) const { return amplitude(q, k) * tau_direction(q); }

MidedgeField SholSolution::field() const {
  MidedgeField f = zero_field(grid);
  for (std::size_t s = 0; s < grid.q.size(); ++s) {
    const cplx tau = tau_direction(grid.q[s]);
    for (std::size_t j = 0; j < a[s].size(); ++j) f.F[s][j] = a[s][j] * tau;
  }
  return f;
}

namespace {

struct Assembly {
  std::vector<Eigen::Triplet<double>> t;
  std::vector<double> rhs;
  std::vector<int> kind;  // 0 holomorphicity, 1 boundary, 2 normalization
  int row = 0;

  void add(int col, double v) { t.emplace_back(row, col, v); }
  void end(double b, int k) {
    rhs.push_back(b);
    kind.push_back(k);
    ++row;
  }
};

// partner column across the neighbour an end U-turns around: the dual one on
// the wired arc, the primal one on the free arc
int partner(int q, Arc arc) {
  const int dual_side = mod4(q) == 1 ? 1 : -1;
  return arc == Arc::wired ? q + 2 * dual_side : q - 2 * dual_side;
}

bool neighbour_open(const DobrushinDomain& d, int medial_q, double y) {
  const auto* m = d.medial(medial_q);
  return m && m->interior.contains(y);
}

}  // namespace

SholSolution solve_shol_bvp(const DobrushinDomain& d, double h_y, BvpOptions opt) {
  require(d.has_marks(), "the boundary value problem needs marks a and b");
  require(h_y > 0 && h_y <= d.delta() / 4 * (1 + 1e-12), "h_y must be in (0, delta/4]");
  SholSolution sol;
  sol.grid = make_midedge_grid(d, h_y);
  const MidedgeGrid& g = sol.grid;
  const double delta = d.delta();
  const std::size_t nc = g.q.size();
  std::vector<int> off(nc + 1, 0);
  for (std::size_t s = 0; s < nc; ++s) off[s + 1] = off[s] + static_cast<int>(g.k1[s] - g.k0[s] + 1);
  const int n = off[nc];
  sol.unknowns = static_cast<std::size_t>(n);
  auto var = [&](int q, std::size_t k) {
    auto s = static_cast<std::size_t>(g.slot(q));
    return off[s] + static_cast<int>(k - g.k0[s]);
  };
  auto covers = [&](int q, std::size_t k) { return g.has(q, k) && g.has(q, k + 1); };

  Assembly A;
  for (std::size_t s = 0; s < nc; ++s) {
    const int q = g.q[s];
    const double sgn = mod4(q) == 1 ? -1.0 : 1.0;
    for (std::size_t k = g.k0[s]; k < g.k1[s]; ++k) {
      const double dy = g.y[k + 1] - g.y[k], mid = 0.5 * (g.y[k] + g.y[k + 1]);
      const double c = sgn * dy / (2 * delta);
      A.add(var(q, k + 1), 1);
      A.add(var(q, k), -1);
      if (neighbour_open(d, q + 1, mid) && covers(q + 2, k)) {
        A.add(var(q + 2, k), -c);
        A.add(var(q + 2, k + 1), -c);
      }
      if (neighbour_open(d, q - 1, mid) && covers(q - 2, k)) {
        A.add(var(q - 2, k), c);
        A.add(var(q - 2, k + 1), c);
      }
      A.end(0, 0);
    }
  }
  for (std::size_t s = 0; s < nc; ++s) {
    const int q = g.q[s];
    const auto* m = d.midedge(q);
    for (bool top : {false, true}) {
      const Arc arc = top ? m->top : m->bottom;
      if (arc == Arc::mark_a || arc == Arc::mark_b) continue;
      const int p = partner(q, arc);
      const std::size_t k = top ? g.k1[s] : g.k0[s];
      const auto* pm = d.midedge(p);
      if (!pm || !g.has(p, k) || (top ? pm->top : pm->bottom) != arc ||
          g.node(top ? pm->span.hi : pm->span.lo) != static_cast<int>(k))
        fail(ErrorKind::ill_posed, "ill-posed discretization: unpaired column end at q=" + std::to_string(q));
      if (p < q) continue;
      // west end a-, east end a+: a- = a+ on wired tops and free bottoms, a- = -a+ otherwise
      const bool equal = (arc == Arc::wired) == top;
      A.add(var(q, k), 1);
      A.add(var(p, k), equal ? -1 : 1);
      A.end(0, 1);
    }
  }
  const Mark& b = d.b();
  const int kb = g.node(b.y);
  require(kb >= 0 && g.has(b.q, static_cast<std::size_t>(kb)), "mark b is not on the grid");
  const double target = opt.norm_target / std::sqrt(delta);
  A.add(var(b.q, static_cast<std::size_t>(kb)), 1);
  A.end(target, 2);

  if (A.row != n) fail(ErrorKind::ill_posed, "ill-posed discretization: " + std::to_string(A.row) + " rows for " +
                                                  std::to_string(n) + " unknowns");
  if (opt.reverse_rows) {
    for (auto& t : A.t) t = Eigen::Triplet<double>(n - 1 - t.row(), t.col(), t.value());
    std::reverse(A.rhs.begin(), A.rhs.end());
    std::reverse(A.kind.begin(), A.kind.end());
  }
  Eigen::SparseMatrix<double> M(n, n);
  M.setFromTriplets(A.t.begin(), A.t.end());
  M.makeCompressed();
  Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(A.rhs.data(), n);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) fail(ErrorKind::ill_posed, "ill-posed discretization: singular system");
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) fail(ErrorKind::ill_posed, "ill-posed discretization: solve failed");
  Eigen::VectorXd res = M * x - rhs;
  sol.system_residual = res.lpNorm<Eigen::Infinity>();
  if (!(sol.system_residual <= 1e-8 * std::max(1.0, x.lpNorm<Eigen::Infinity>())))
    fail(ErrorKind::ill_posed, "ill-posed discretization: residual " + std::to_string(sol.system_residual));
  for (int r = 0; r < n; ++r)
    if (A.kind[static_cast<std::size_t>(r)] == 1) sol.boundary_residual = std::max(sol.boundary_residual, std::abs(res[r]));

  sol.a.resize(nc);
  for (std::size_t s = 0; s < nc; ++s) sol.a[s].assign(x.data() + off[s], x.data() + off[s + 1]);
  sol.normalization_residual = std::abs(sol.amplitude(b.q, static_cast<std::size_t>(kb)) - target) / std::abs(target);

  // consistency with the ODE at interior nodes. Column ends are skipped on every
  // column: the solution is only piecewise smooth in y across those heights.
  std::vector<char> breaks(g.y.size(), 0);
  for (std::size_t s = 0; s < nc; ++s) breaks[g.k0[s]] = breaks[g.k1[s]] = 1;
  for (std::size_t s = 0; s < nc; ++s) {
    const int q = g.q[s];
    const double sgn = mod4(q) == 1 ? -1.0 : 1.0;
    for (std::size_t k = g.k0[s] + 1; k < g.k1[s]; ++k) {
      const double hp = g.y[k + 1] - g.y[k], hm = g.y[k] - g.y[k - 1];
      if (std::abs(hp - hm) > 1e-9 * h_y || breaks[k]) continue;
      bool ok = true;
      for (int side : {-1, 1})
        for (std::size_t kk : {k - 1, k, k + 1}) ok = ok && neighbour_open(d, q + side, g.y[kk]) == neighbour_open(d, q + side, g.y[k]);
      if (!ok) continue;
      double e = neighbour_open(d, q + 1, g.y[k]) ? sol.amplitude(q + 2, k) : 0;
      double w = neighbour_open(d, q - 1, g.y[k]) ? sol.amplitude(q - 2, k) : 0;
      double r = (sol.amplitude(q, k + 1) - sol.amplitude(q, k - 1)) / (hp + hm) - sgn * (e - w) / delta;
      sol.holo_residual = std::max(sol.holo_residual, std::abs(r));
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Continuum reference

namespace {

double polygon_area(const Polygon& p) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto &u = p[i], &v = p[(i + 1) % p.size()];
    s += u.x * v.y - v.x * u.y;
  }
  return s / 2;
}

// arclength position of a boundary point, or -1
double boundary_param(const Polygon& p, double x, double y, double eps) {
  double t = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto &u = p[i], &v = p[(i + 1) % p.size()];
    const double len = std::hypot(v.x - u.x, v.y - u.y);
    const double lo_x = std::min(u.x, v.x), hi_x = std::max(u.x, v.x);
    const double lo_y = std::min(u.y, v.y), hi_y = std::max(u.y, v.y);
    if (x >= lo_x - eps && x <= hi_x + eps && y >= lo_y - eps && y <= hi_y + eps &&
        (std::abs(u.x - v.x) < eps ? std::abs(x - u.x) <= eps : std::abs(y - u.y) <= eps))
      return t + std::hypot(x - u.x, y - u.y);
    t += len;
  }
  return -1;
}

bool point_in_polygon(const Polygon& p, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
    if ((p[i].y > y) != (p[j].y > y) && x < (p[j].x - p[i].x) * (y - p[i].y) / (p[j].y - p[i].y) + p[i].x) in = !in;
  }
  return in;
}

}  // namespace

double ContinuumReference::h_at(double x, double y) const {
  double u = (x - x0) / h, v = (y - y0) / h;
  int i = std::clamp(static_cast<int>(std::floor(u)), 0, nx - 2);
  int j = std::clamp(static_cast<int>(std::floor(v)), 0, ny - 2);
  double s = u - i, t = v - j;
  for (int di : {0, 1})
    for (int dj : {0, 1}) require(inside[id(i + di, j + dj)] != 0, "point outside the continuum domain");
  return (1 - s) * (1 - t) * hval[id(i, j)] + s * (1 - t) * hval[id(i + 1, j)] + (1 - s) * t * hval[id(i, j + 1)] +
         s * t * hval[id(i + 1, j + 1)];
}

bool ContinuumReference::f_defined(double x, double y) const {
  double u = (x - x0) / h, v = (y - y0) / h;
  int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
  if (i < 0 || j < 0 || i + 1 >= nx || j + 1 >= ny) return false;
  for (int di : {0, 1})
    for (int dj : {0, 1})
      if (inside[id(i + di, j + dj)] != 1) return false;
  return true;
}

cplx ContinuumReference::f_at(double x, double y) const {
  require(f_defined(x, y), "f is only defined between interior nodes");
  double u = (x - x0) / h, v = (y - y0) / h;
  int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
  double s = u - i, t = v - j;
  return (1 - s) * (1 - t) * f[id(i, j)] + s * (1 - t) * f[id(i + 1, j)] + (1 - s) * t * f[id(i, j + 1)] +
         s * t * f[id(i + 1, j + 1)];
}

ContinuumReference continuum_reference(const Polygon& poly_in, PlanePoint a, PlanePoint b, double h) {
  require(poly_in.size() >= 4 && h > 0, "need a polygon and a positive step");
  Polygon poly = poly_in;
  if (polygon_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  ContinuumReference R;
  R.h = h;
  double xmin = poly[0].x, xmax = xmin, ymin = poly[0].y, ymax = ymin;
  for (const auto& v : poly) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  for (const auto& v : poly) {
    double ix = (v.x - xmin) / h, iy = (v.y - ymin) / h;
    require(std::abs(ix - std::round(ix)) < 1e-7 && std::abs(iy - std::round(iy)) < 1e-7,
            "polygon vertices must lie on the continuum grid");
  }
  R.x0 = xmin;
  R.y0 = ymin;
  R.nx = static_cast<int>(std::lround((xmax - xmin) / h)) + 1;
  R.ny = static_cast<int>(std::lround((ymax - ymin) / h)) + 1;
  const double eps = 1e-9 * h;
  double L = 0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    L += std::hypot(poly[(i + 1) % poly.size()].x - poly[i].x, poly[(i + 1) % poly.size()].y - poly[i].y);
  const double ta = boundary_param(poly, a.x, a.y, 1e-9), tb = boundary_param(poly, b.x, b.y, 1e-9);
  require(ta >= 0 && tb >= 0, "a and b must lie on the polygon boundary");
  auto wrap = [L](double t) { return std::fmod(std::fmod(t, L) + L, L); };
  const double arc_ab = wrap(tb - ta);

  const std::size_t N = static_cast<std::size_t>(R.nx) * static_cast<std::size_t>(R.ny);
  R.inside.assign(N, 0);
  R.hval.assign(N, 0);
  R.f.assign(N, cplx(0, 0));
  std::vector<int> unk(N, -1);
  int nu = 0;
  for (int j = 0; j < R.ny; ++j)
    for (int i = 0; i < R.nx; ++i) {
      const double x = R.x0 + i * h, y = R.y0 + j * h;
      const std::size_t id = R.id(i, j);
      double t = boundary_param(poly, x, y, eps);
      if (t >= 0) {
        R.inside[id] = 2;
        double s = wrap(t - ta);
        if (s < eps || std::abs(s - arc_ab) < eps)
          R.hval[id] = 0.5;
        else
          R.hval[id] = s < arc_ab ? 1.0 : 0.0;
      } else if (point_in_polygon(poly, x, y)) {
        R.inside[id] = 1;
        unk[id] = nu++;
      }
    }
  require(nu > 0, "no interior nodes");
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu);
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < R.ny; ++j)
    for (int i = 0; i < R.nx; ++i) {
      const int u = unk[R.id(i, j)];
      if (u < 0) continue;
      t.emplace_back(u, u, 4.0);
      for (int s = 0; s < 4; ++s) {
        const std::size_t nb = R.id(i + di[s], j + dj[s]);
        if (unk[nb] >= 0)
          t.emplace_back(u, unk[nb], -1.0);
        else if (R.inside[nb] == 2)
          rhs[u] += R.hval[nb];
        else
          fail(ErrorKind::corrupt, "interior node next to an outside node");
      }
    }
  Eigen::SparseMatrix<double> M(nu, nu);
  M.setFromTriplets(t.begin(), t.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(M);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::singular, "Laplace system factorization failed");
  Eigen::VectorXd sol = ldlt.solve(rhs);
  for (std::size_t id = 0; id < N; ++id)
    if (unk[id] >= 0) R.hval[id] = sol[unk[id]];

  // Phi' = h_y + i h_x, then a square root continued from the node nearest b
  std::vector<cplx> dphi(N, cplx(0, 0));
  for (int j = 0; j < R.ny; ++j)
    for (int i = 0; i < R.nx; ++i) {
      const std::size_t id = R.id(i, j);
      if (R.inside[id] != 1) continue;
      double hx = (R.hval[R.id(i + 1, j)] - R.hval[R.id(i - 1, j)]) / (2 * h);
      double hy = (R.hval[R.id(i, j + 1)] - R.hval[R.id(i, j - 1)]) / (2 * h);
      dphi[id] = cplx(hy, hx);
    }
  std::size_t start = N;
  double best = 1e300;
  for (int j = 0; j < R.ny; ++j)
    for (int i = 0; i < R.nx; ++i)
      if (R.inside[R.id(i, j)] == 1) {
        double dist = std::hypot(R.x0 + i * h - b.x, R.y0 + j * h - b.y);
        if (dist < best) {
          best = dist;
          start = R.id(i, j);
        }
      }
  std::vector<char> seen(N, 0);
  std::deque<std::size_t> queue{start};
  seen[start] = 1;
  R.f[start] = std::sqrt(dphi[start]);
  while (!queue.empty()) {
    const std::size_t id = queue.front();
    queue.pop_front();
    const int i = static_cast<int>(id % static_cast<std::size_t>(R.nx)), j = static_cast<int>(id / static_cast<std::size_t>(R.nx));
    for (int s = 0; s < 4; ++s) {
      const std::size_t nb = R.id(i + di[s], j + dj[s]);
      if (R.inside[nb] != 1 || seen[nb]) continue;
      cplx c = std::sqrt(dphi[nb]);
      if ((c * std::conj(R.f[id])).real() < 0) c = -c;
      R.f[nb] = c;
      seen[nb] = 1;
      queue.push_back(nb);
    }
  }
  for (int j = 0; j < R.ny; ++j)
    for (int i = 0; i + 1 < R.nx; ++i)
      for (int s : {0, 2}) {
        if (j + dj[s] >= R.ny) continue;
        const std::size_t u = R.id(i, j), v = R.id(i + di[s], j + dj[s]);
        if (R.inside[u] != 1 || R.inside[v] != 1) continue;
        if (!seen[u] || !seen[v]) fail(ErrorKind::invalid_input, "interior is not connected");
        if ((R.f[u] * std::conj(R.f[v])).real() <= 0) fail(ErrorKind::invalid_input, "branch propagation conflict");
      }
  return R;
}

std::vector<ConvergenceRow> convergence_report(const Polygon& polygon, PlanePoint a, PlanePoint b,
                                               const std::vector<double>& ladder, const CompactRect& compact,
                                               double continuum_h, double hy_fraction) {
  require(!ladder.empty(), "empty ladder");
  for (std::size_t i = 1; i < ladder.size(); ++i) require(ladder[i] < ladder[i - 1], "ladder not decreasing");
  require(compact.x0 < compact.x1 && compact.y0 < compact.y1, "empty compact");
  ContinuumReference ref = continuum_reference(polygon, a, b, continuum_h);
  std::vector<ConvergenceRow> rows;
  for (double delta : ladder) {
    DobrushinDomain d = semidiscretize(polygon, a, b, delta);
    ConvergenceRow row;
    row.delta = delta;
    row.hy = delta * hy_fraction;
    SholSolution sol = solve_shol_bvp(d, row.hy);
    MidedgeField F = sol.field();
    PrimitiveField P = accumulate_H(F, d);
    row.holo_residual = sol.holo_residual;

    struct Sample {
      cplx g, f;
      double H, h;
    };
    std::vector<Sample> pts;
    for (int q = P.q_min; q <= P.q_max; q += 2) {
      const double x = q * delta / 4;
      if (x < compact.x0 || x > compact.x1) continue;
      for (std::size_t k = 0; k < P.grid.y.size(); ++k) {
        const double y = P.grid.y[k];
        if (y < compact.y0 || y > compact.y1 || !P.has(q, k)) continue;
        require(d.medial(q)->interior.contains(y), "compact must lie inside the domain");
        pts.push_back({medial_observable(F, q, k).g, ref.f_at(x, y), P.at(q, k), ref.h_at(x, y)});
      }
    }
    require(!pts.empty(), "compact holds no lattice points");
    double align = 0;
    for (const auto& p : pts) align += (p.g * std::conj(p.f)).real();
    row.sign = align >= 0 ? 1 : -1;
    double l2 = 0;
    for (const auto& p : pts) {
      double e = std::abs(p.g - static_cast<double>(row.sign) * p.f);
      row.sup_err_F = std::max(row.sup_err_F, e);
      l2 += e * e;
      row.sup_err_H = std::max(row.sup_err_H, std::abs(p.H - p.h));
    }
    row.points = pts.size();
    // each medial point stands for a delta/2 by h_y cell
    row.l2_err_F = std::sqrt(l2 * delta / 2 * row.hy);

    // H on the arcs
    for (int q = P.q_min; q <= P.q_max; q += 2)
      for (std::size_t k = 0; k < P.grid.y.size(); ++k) {
        if (!P.has(q, k)) continue;
        auto arc = d.arc_at(q, P.grid.y[k]);
        if (mod4(q) == 0 && arc == Arc::wired) row.wired_dev = std::max(row.wired_dev, std::abs(P.at(q, k) - 1));
        if (mod4(q) == 2 && arc == Arc::free) row.free_dev = std::max(row.free_dev, std::abs(P.at(q, k)));
      }
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << std::setprecision(17);
  os << "delta,hy,sup_err_F,l2_err_F,sup_err_H,holo_residual\n";
  for (const auto& r : rows)
    os << r.delta << ',' << r.hy << ',' << r.sup_err_F << ',' << r.l2_err_F << ',' << r.sup_err_H << ','
       << r.holo_residual << '\n';
}

}  // namespace sdqi
