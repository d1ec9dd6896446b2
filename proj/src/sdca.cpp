#include "sdqi/sdca.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace sdqi {

cplx delta_x(const Field& f, double delta, double x, double y) {
  return (f(x + delta / 2, y) - f(x - delta / 2, y)) / delta;
}

cplx delta_xx(const Field& f, double delta, double x, double y) {
  return (f(x + delta, y) + f(x - delta, y) - 2.0 * f(x, y)) / (delta * delta);
}

cplx d_y(const Field& f, double x, double y, double h) { return (f(x, y + h) - f(x, y - h)) / (2 * h); }

cplx d_yy(const Field& f, double x, double y, double h) {
  return (f(x, y + h) + f(x, y - h) - 2.0 * f(x, y)) / (h * h);
}

cplx d_z(const Field& f, double delta, double x, double y, double h) {
  return 0.5 * (delta_x(f, delta, x, y) + d_y(f, x, y, h) / kI);
}

cplx d_zbar(const Field& f, double delta, double x, double y, double h) {
  return 0.5 * (delta_x(f, delta, x, y) - d_y(f, x, y, h) / kI);
}

cplx laplacian(const Field& f, double delta, double x, double y, double h) {
  return delta_xx(f, delta, x, y) + d_yy(f, x, y, h);
}

cplx integrate(const std::function<cplx(double)>& f, double a, double b, double tol, int panels, double* err) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  cplx total = 0;
  double e_total = 0;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * w, hi = p + 1 == panels ? b : a + (p + 1) * w;
    double e = 0;
    total += GK::integrate(f, lo, hi, 15, tol, &e);
    e_total += e;
  }
  if (err) *err = e_total;
  return total;
}

cplx contour_integral(const Field& f, double delta, double x0, double alpha, double beta, double tol) {
  double xm = x0 + delta / 2;
  cplx horiz = delta * (f(xm, alpha) - f(xm, beta));
  cplx vert = integrate([&](double y) { return f(x0 + delta, y) - f(x0, y); }, alpha, beta, tol, 4);
  return horiz + kI * vert;
}

cplx area_integral_dzbar(const Field& f, double delta, double x0, double alpha, double beta, double h, double tol) {
  double xm = x0 + delta / 2;
  return 2.0 * kI * delta *
         integrate([&](double y) { return d_zbar(f, delta, xm, y, h); }, alpha, beta, tol, 4);
}

cplx pair_contour_integral(const Field& f, const Field& g, double delta, double xk, double alpha, double beta,
                           double h, double tol) {
  double xl = xk - delta, xr = xk + delta;
  cplx right = integrate([&](double y) { return f(xk, y) * g(xr, y) - f(xr, y) * g(xk, y); }, alpha, beta, tol, 4);
  cplx left = integrate([&](double y) { return f(xl, y) * g(xk, y) - f(xk, y) * g(xl, y); }, alpha, beta, tol, 4);
  auto horiz = [&](double y) { return g(xk, y) * d_y(f, xk, y, h) - f(xk, y) * d_y(g, xk, y, h); };
  return right - left + delta * delta * (horiz(alpha) - horiz(beta));
}

cplx pair_area_integral(const Field& f, const Field& g, double delta, double xk, double alpha, double beta, double h,
                        double tol) {
  return delta * delta *
         integrate(
             [&](double y) {
               return f(xk, y) * laplacian(g, delta, xk, y, h) - g(xk, y) * laplacian(f, delta, xk, y, h);
             },
             alpha, beta, tol, 4);
}

int ColumnDomain::index(int qq) const {
  int off = qq - q_first;
  if (off < 0 || off % step() != 0) return -1;
  int i = off / step();
  return i < static_cast<int>(cols.size()) ? i : -1;
}

bool ColumnDomain::contains_interior(int qq, double y) const {
  int i = index(qq);
  return i >= 0 && cols[static_cast<std::size_t>(i)].interior.contains(y);
}

void ColumnDomain::validate() const {
  require(delta > 0, "mesh must be positive");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const Interval iv = cols[i].interior;
    if (iv.empty()) continue;
    for (int side : {-1, 1}) {
      int j = static_cast<int>(i) + side;
      require(j >= 0 && j < static_cast<int>(cols.size()), "interior column on the edge of the domain",
              ErrorKind::ill_posed);
      const MedialColumn& nb = cols[static_cast<std::size_t>(j)];
      // cut the interior at every endpoint of the neighbour and test each piece's midpoint
      std::vector<double> cuts = {iv.lo, iv.hi};
      auto add = [&](Interval w) {
        for (double c : {w.lo, w.hi})
          if (iv.contains(c)) cuts.push_back(c);
      };
      add(nb.interior);
      for (const auto& w : nb.walls) add(w);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double y = 0.5 * (cuts[k] + cuts[k + 1]);
        require(nb.interior.contains(y) || nb.on_wall(y),
                "column q=" + std::to_string(q(i)) + " sees outside the domain at y=" + std::to_string(y),
                ErrorKind::ill_posed);
      }
    }
  }
}

ColumnDomain column_rectangle(Role role, int q_first, int n, double y0, double y1, double delta) {
  require(n >= 3, "a rectangle needs at least three columns");
  require(y1 > y0, "empty height range");
  ColumnDomain d;
  d.delta = delta;
  d.role = role;
  d.q_first = q_first;
  for (int i = 0; i < n; ++i) {
    MedialColumn c;
    c.q = d.q(static_cast<std::size_t>(i));
    if (i == 0 || i == n - 1)
      c.walls.push_back({y0, y1});
    else
      c.interior = {y0, y1};
    d.cols.push_back(c);
  }
  require(ColumnCoord{d.q(0)}.role() == role || role == Role::medial, "q_first does not match the role");
  d.validate();
  return d;
}

ColumnDomain column_domain(const DobrushinDomain& dom, Role role) {
  require(role != Role::midedge, "mid-edge columns carry no Dirichlet problem");
  ColumnDomain d;
  d.delta = dom.delta();
  d.role = role;
  int step = d.step();
  int first = dom.q_min();
  while (role != Role::medial && ColumnCoord{first}.role() != role) first += 2;
  d.q_first = first;
  for (int q = first; q <= dom.q_max(); q += step) d.cols.push_back(*dom.medial(q));
  d.validate();
  return d;
}

// Columns of one role plus an exterior layer of walls wherever an interior
// point would otherwise see outside: the boundary modification trick.
ColumnDomain extended_column_domain(const DobrushinDomain& d, Role role) {
  ColumnDomain cd;
  cd.delta = d.delta();
  cd.role = role;
  int first = d.q_min();
  while (ColumnCoord{first}.role() != role) ++first;
  cd.q_first = first - 4;
  for (int q = cd.q_first; q <= d.q_max() + 4; q += 4) {
    const auto* m = d.medial(q);
    MedialColumn c = m ? *m : MedialColumn{};
    c.q = q;
    if (!m) c.interior = {0, 0};
    cd.cols.push_back(c);
  }
  const std::vector<MedialColumn> base = cd.cols;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const Interval iv = base[i].interior;
    if (iv.empty()) continue;
    for (int side : {-1, 1}) {
      const auto j = static_cast<std::size_t>(static_cast<int>(i) + side);
      const MedialColumn& nb = base[j];
      std::vector<double> cuts = {iv.lo, iv.hi};
      auto add = [&](Interval w) {
        for (double c : {w.lo, w.hi})
          if (iv.contains(c)) cuts.push_back(c);
      };
      add(nb.interior);
      for (const auto& w : nb.walls) add(w);
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double y = 0.5 * (cuts[k] + cuts[k + 1]);
        if (nb.interior.contains(y) || nb.on_wall(y)) continue;
        auto& walls = cd.cols[j].walls;
        if (!walls.empty() && std::abs(walls.back().hi - cuts[k]) < 1e-12)
          walls.back().hi = cuts[k + 1];
        else
          walls.push_back({cuts[k], cuts[k + 1]});
      }
    }
  }
  cd.validate();
  return cd;
}

int GridFunction::node(std::size_t i, double y) const {
  const auto& ys = cols[i].y;
  const double eps = 1e-9 * h;
  auto it = std::lower_bound(ys.begin(), ys.end(), y - eps);
  if (it != ys.end() && std::abs(*it - y) <= eps) return static_cast<int>(it - ys.begin());
  return -1;
}

cplx GridFunction::interpolate(std::size_t i, double y) const {
  const auto& ys = cols[i].y;
  require(!ys.empty() && y >= ys.front() - 1e-12 && y <= ys.back() + 1e-12, "interpolation outside the column");
  auto it = std::upper_bound(ys.begin(), ys.end(), y);
  if (it == ys.end()) return cols[i].v.back();
  if (it == ys.begin()) return cols[i].v.front();
  std::size_t j = static_cast<std::size_t>(it - ys.begin());
  double w = (y - ys[j - 1]) / (ys[j] - ys[j - 1]);
  return (1 - w) * cols[i].v[j - 1] + w * cols[i].v[j];
}

std::size_t GridFunction::n_interior() const {
  std::size_t n = 0;
  for (const auto& c : cols)
    for (char b : c.boundary) n += b ? 0 : 1;
  return n;
}

GridFunction make_grid(const ColumnDomain& d, double h, double y_origin) {
  require(h > 0, "grid step must be positive");
  GridFunction g;
  g.domain = &d;
  g.h = h;
  g.y_origin = y_origin;
  const double eps = 1e-9 * h;
  for (std::size_t i = 0; i < d.cols.size(); ++i) {
    const MedialColumn& mc = d.cols[i];
    std::vector<std::pair<double, char>> nodes;  // (y, boundary)
    auto aligned = [&](double lo, double hi, char b, bool open) {
      long j0 = static_cast<long>(std::ceil((lo - y_origin) / h - (open ? -1e-9 : 1e-9)));
      long j1 = static_cast<long>(std::floor((hi - y_origin) / h + (open ? -1e-9 : 1e-9)));
      for (long j = j0; j <= j1; ++j) nodes.emplace_back(y_origin + static_cast<double>(j) * h, b);
    };
    if (!mc.interior.empty()) {
      nodes.emplace_back(mc.interior.lo, 1);
      nodes.emplace_back(mc.interior.hi, 1);
      aligned(mc.interior.lo, mc.interior.hi, 0, true);
    }
    for (const auto& w : mc.walls) {
      nodes.emplace_back(w.lo, 1);
      nodes.emplace_back(w.hi, 1);
      aligned(w.lo, w.hi, 1, false);
    }
    std::sort(nodes.begin(), nodes.end());
    GridColumn col;
    col.q = d.q(i);
    col.x = d.x(i);
    for (auto [y, b] : nodes) {
      if (!col.y.empty() && std::abs(y - col.y.back()) <= eps) {
        col.boundary.back() = static_cast<char>(col.boundary.back() | b);
        continue;
      }
      col.y.push_back(y);
      col.boundary.push_back(b);
    }
    col.v.assign(col.y.size(), cplx(0, 0));
    g.cols.push_back(std::move(col));
  }
  return g;
}

GridFunction sample_field(const ColumnDomain& d, double h, const Field& f) {
  GridFunction g = make_grid(d, h);
  for (auto& c : g.cols)
    for (std::size_t j = 0; j < c.y.size(); ++j) c.v[j] = f(c.x, c.y[j]);
  return g;
}

namespace {

// nonuniform three-point weights for the first and second derivative at the middle node
struct Stencil {
  double m, c, p;
};

Stencil second_derivative(double h1, double h2) {
  return {2 / (h1 * (h1 + h2)), -2 / (h1 * h2), 2 / (h2 * (h1 + h2))};
}

Stencil first_derivative(double h1, double h2) {
  double s = h1 * h2 * (h1 + h2);
  return {-h2 * h2 / s, (h2 * h2 - h1 * h1) / s, h1 * h1 / s};
}

cplx neighbour_value(const GridFunction& f, std::size_t i, int side, double y) {
  int k = static_cast<int>(i) + side;
  require(k >= 0 && k < static_cast<int>(f.cols.size()), "needs interior", ErrorKind::invalid_input);
  int j = f.node(static_cast<std::size_t>(k), y);
  require(j >= 0, "needs interior: no neighbour node at this height");
  return f.cols[static_cast<std::size_t>(k)].v[static_cast<std::size_t>(j)];
}

void require_interior(const GridFunction& f, std::size_t i, std::size_t j) {
  require(i < f.cols.size() && j < f.cols[i].y.size() && !f.cols[i].boundary[j], "needs interior");
}

cplx dy_at(const GridFunction& f, std::size_t i, std::size_t j) {
  const auto& c = f.cols[i];
  Stencil s = first_derivative(c.y[j] - c.y[j - 1], c.y[j + 1] - c.y[j]);
  return s.m * c.v[j - 1] + s.c * c.v[j] + s.p * c.v[j + 1];
}

}  // namespace

cplx laplacian(const GridFunction& f, std::size_t i, std::size_t j) {
  require_interior(f, i, j);
  require(f.domain->role != Role::medial, "the Laplacian lives on primal or dual grids");
  const auto& c = f.cols[i];
  const double delta = f.domain->delta;
  Stencil s = second_derivative(c.y[j] - c.y[j - 1], c.y[j + 1] - c.y[j]);
  cplx dyy = s.m * c.v[j - 1] + s.c * c.v[j] + s.p * c.v[j + 1];
  cplx dxx = (neighbour_value(f, i, 1, c.y[j]) + neighbour_value(f, i, -1, c.y[j]) - 2.0 * c.v[j]) / (delta * delta);
  return dxx + dyy;
}

cplx d_z(const GridFunction& f, std::size_t i, std::size_t j) {
  require_interior(f, i, j);
  require(f.domain->role == Role::medial, "derivatives need a medial grid");
  double y = f.cols[i].y[j];
  cplx dx = (neighbour_value(f, i, 1, y) - neighbour_value(f, i, -1, y)) / f.domain->delta;
  return 0.5 * (dx + dy_at(f, i, j) / kI);
}

cplx d_zbar(const GridFunction& f, std::size_t i, std::size_t j) {
  require_interior(f, i, j);
  require(f.domain->role == Role::medial, "derivatives need a medial grid");
  double y = f.cols[i].y[j];
  cplx dx = (neighbour_value(f, i, 1, y) - neighbour_value(f, i, -1, y)) / f.domain->delta;
  return 0.5 * (dx - dy_at(f, i, j) / kI);
}

cplx domain_integral(const GridFunction& f) {
  const double dx = f.domain->step() * f.domain->delta / 4;
  cplx total = 0;
  for (std::size_t i = 0; i < f.cols.size(); ++i) {
    const Interval iv = f.domain->cols[i].interior;
    if (iv.empty()) continue;
    const auto& c = f.cols[i];
    int a = f.node(i, iv.lo), b = f.node(i, iv.hi);
    for (int j = a; j < b; ++j) {
      auto ju = static_cast<std::size_t>(j);
      total += 0.5 * (c.v[ju] + c.v[ju + 1]) * (c.y[ju + 1] - c.y[ju]);
    }
  }
  return dx * total;
}

GridFunction solve_dirichlet(const ColumnDomain& d, const std::function<double(double, double)>& g, double h,
                             DirichletOptions opt, DirichletReport* report) {
  require(d.role == Role::primal || d.role == Role::dual, "Dirichlet problems live on primal or dual domains");
  GridFunction f = make_grid(d, h);
  // number the unknowns
  std::vector<std::vector<int>> id(f.cols.size());
  int n = 0;
  std::vector<std::size_t> order(f.cols.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = opt.reverse_ordering ? order.size() - 1 - i : i;
  for (std::size_t i : order) {
    auto& c = f.cols[i];
    id[i].assign(c.y.size(), -1);
    for (std::size_t j = 0; j < c.y.size(); ++j) {
      if (c.boundary[j])
        c.v[j] = g(c.x, c.y[j]);
      else
        id[i][j] = n++;
    }
  }
  if (n == 0) fail(ErrorKind::singular, "degenerate domain: no interior nodes");

  const double inv_dx2 = 1 / (d.delta * d.delta);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  // rows store -lap so the diagonal is positive
  auto couple = [&](int row, std::size_t i, std::size_t j, double w) {
    int col = id[i][j];
    if (col >= 0)
      trip.emplace_back(row, col, -w);
    else
      rhs[row] += w * f.cols[i].v[j].real();
  };
  for (std::size_t i = 0; i < f.cols.size(); ++i) {
    const auto& c = f.cols[i];
    for (std::size_t j = 0; j < c.y.size(); ++j) {
      int row = id[i][j];
      if (row < 0) continue;
      Stencil s = second_derivative(c.y[j] - c.y[j - 1], c.y[j + 1] - c.y[j]);
      trip.emplace_back(row, row, -(s.c - 2 * inv_dx2));
      couple(row, i, j - 1, s.m);
      couple(row, i, j + 1, s.p);
      for (int side : {-1, 1}) {
        int k = static_cast<int>(i) + side;
        int jj = k >= 0 && k < static_cast<int>(f.cols.size()) ? f.node(static_cast<std::size_t>(k), c.y[j]) : -1;
        if (jj < 0)
          fail(ErrorKind::ill_posed, "domain not closed next to q=" + std::to_string(c.q) + " at y=" +
                                         std::to_string(c.y[j]));
        couple(row, static_cast<std::size_t>(k), static_cast<std::size_t>(jj), inv_dx2);
      }
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) fail(ErrorKind::singular, "Dirichlet system is singular");
  Eigen::VectorXd x = lu.solve(rhs);
  double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  double res = (A * x - rhs).lpNorm<Eigen::Infinity>() / scale;
  if (!(res <= 1e-10)) fail(ErrorKind::singular, "Dirichlet solve residual " + std::to_string(res));
  for (std::size_t i = 0; i < f.cols.size(); ++i)
    for (std::size_t j = 0; j < f.cols[i].y.size(); ++j)
      if (id[i][j] >= 0) f.cols[i].v[j] = x[id[i][j]];
  if (report) {
    report->residual = res;
    report->unknowns = static_cast<std::size_t>(n);
  }
  return f;
}

}  // namespace sdqi
