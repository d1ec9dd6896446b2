#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <functional>
#include <optional>
#include <vector>

#include "sdqi/lattice.hpp"

namespace sdqi {

// ---------------------------------------------------------------------------
// Operators on fields given everywhere on the medial lattice (x in delta/2 Z).

using Field = std::function<cplx(double x, double y)>;

cplx delta_x(const Field& f, double delta, double x, double y);  // (f(x+d/2) - f(x-d/2)) / d
cplx delta_xx(const Field& f, double delta, double x, double y);  // uses x +- delta
cplx d_y(const Field& f, double x, double y, double h);           // central difference
cplx d_yy(const Field& f, double x, double y, double h);
cplx d_z(const Field& f, double delta, double x, double y, double h);
cplx d_zbar(const Field& f, double delta, double x, double y, double h);
cplx laplacian(const Field& f, double delta, double x, double y, double h);

// Adaptive Gauss-Kronrod on [a, b] cut into equal panels; err accumulates the estimate.
cplx integrate(const std::function<cplx(double)>& f, double a, double b, double tol, int panels = 1,
               double* err = nullptr);

// Elementary domain [x0, x0 + delta] x [alpha, beta], boundary counterclockwise.
cplx contour_integral(const Field& f, double delta, double x0, double alpha, double beta, double tol);
// 2i times the integral of dbar f over the same domain (sampled on its middle column)
cplx area_integral_dzbar(const Field& f, double delta, double x0, double alpha, double beta, double h,
                         double tol);
// pair integral around the elementary domain [xk - d/2, xk + d/2] x [alpha, beta]
cplx pair_contour_integral(const Field& f, const Field& g, double delta, double xk, double alpha, double beta,
                           double h, double tol);
// delta * integral of (f lap g - g lap f) over the same domain
cplx pair_area_integral(const Field& f, const Field& g, double delta, double xk, double alpha, double beta,
                        double h, double tol);

// ---------------------------------------------------------------------------
// Semi-discrete domains of one role and grid functions on them.

// Columns of a single role (or all medial columns), contiguous in q with step 4
// (primal, dual) or 2 (medial). Each column has an open interior and boundary walls.
struct ColumnDomain {
  double delta = 1.0;
  Role role = Role::primal;
  int q_first = 0;
  std::vector<MedialColumn> cols;

  int step() const { return role == Role::primal || role == Role::dual ? 4 : 2; }
  int q(std::size_t i) const { return q_first + step() * static_cast<int>(i); }
  double x(std::size_t i) const { return q(i) * delta / 4; }
  // index of column q, or -1
  int index(int q) const;
  // throws unless every interior point sees an interior point or a wall on both sides
  void validate() const;
  bool contains_interior(int q, double y) const;
};

// n columns of the role starting at quarter index q_first; the outer two are walls.
ColumnDomain column_rectangle(Role role, int q_first, int n, double y0, double y1, double delta);
ColumnDomain column_domain(const DobrushinDomain& d, Role role);
// Same columns plus an exterior layer of walls wherever an interior point would
// otherwise see outside (the boundary modification trick). Works on any domain.
ColumnDomain extended_column_domain(const DobrushinDomain& d, Role role);

struct GridColumn {
  int q = 0;
  double x = 0;
  std::vector<double> y;
  std::vector<cplx> v;
  std::vector<char> boundary;
};

// Values on an aligned y-grid: interior nodes at y_origin + j*h strictly inside
// each column interior, plus the column ends and aligned wall points as
// boundary nodes. End spacings may be shorter than h.
struct GridFunction {
  const ColumnDomain* domain = nullptr;
  double h = 0;
  double y_origin = 0;
  std::vector<GridColumn> cols;

  // node index at height y on column i, or -1
  int node(std::size_t i, double y) const;
  cplx at(std::size_t i, std::size_t j) const { return cols[i].v[j]; }
  // linear interpolation along a column
  cplx interpolate(std::size_t i, double y) const;
  std::size_t n_interior() const;
};

GridFunction make_grid(const ColumnDomain& d, double h, double y_origin = 0);
GridFunction sample_field(const ColumnDomain& d, double h, const Field& f);

// operators at an interior node (column i, node j); neighbours must exist at the same height
cplx laplacian(const GridFunction& f, std::size_t i, std::size_t j);
cplx d_z(const GridFunction& f, std::size_t i, std::size_t j);
cplx d_zbar(const GridFunction& f, std::size_t i, std::size_t j);
// domain integral delta * sum over interior columns of the trapezoid rule in y
cplx domain_integral(const GridFunction& f);

struct DirichletOptions {
  bool reverse_ordering = false;  // number unknowns from the last column
};

struct DirichletReport {
  double residual = 0;  // max-norm residual of the discrete equations
  std::size_t unknowns = 0;
};

// Solves lap f = 0 in the interior with f = g on boundary nodes.
GridFunction solve_dirichlet(const ColumnDomain& d, const std::function<double(double x, double y)>& g, double h,
                             DirichletOptions opt = {}, DirichletReport* report = nullptr);

// ---------------------------------------------------------------------------
// Brownian motion and harmonic measure.

double exit_side_probability(double delta, double epsilon);

struct BmExit {
  std::size_t col = 0;  // column index in the domain
  double y = 0;
  bool on_wall = false;  // exited by a jump onto a wall; otherwise through a column end
  double time = 0;
};

// Horizontal jumps +-delta after Exp(mean delta^2) times; vertical Brownian motion
// stepped with dt = (column length / substeps)^2 and Brownian-bridge exit checks.
BmExit simulate_bm(const ColumnDomain& d, std::size_t col, double y, Rng& rng, int substeps = 8);

struct HarmonicMeasure {
  // atoms at column ends: (column index, height, mass)
  struct Atom {
    std::size_t col;
    double y;
    double mass;
  };
  std::vector<Atom> atoms;
  // wall densities as bin masses: (column index, lo, hi, mass)
  struct Bin {
    std::size_t col;
    double lo, hi;
    double mass;
  };
  std::vector<Bin> bins;
  std::vector<double> sigma;  // standard errors, atoms first then bins; MC only
  double total() const;
};

HarmonicMeasure harmonic_measure_mc(const ColumnDomain& d, std::size_t col, double y, Rng& rng, int n,
                                    double bin_width);
// from the domain Green's function with pole at (col, y)
HarmonicMeasure harmonic_measure_green(const ColumnDomain& d, std::size_t col, double y, double h,
                                       double bin_width);

// ---------------------------------------------------------------------------
// Green's functions.

struct GreenEvaluation {
  cplx zeta;  // lattice point (x, y) as x + i y
  double value = 0;
  double quadrature_error = 0;
  double delta = 1;
  bool converged = true;
};

// G on Z x R (delta = 1) at m + i t, and its analytic t-derivatives
GreenEvaluation green_raw(int m, double t, double tol = 1e-12);
double green_raw_dt(int m, double t, double tol = 1e-12);
double green_raw_dtt(int m, double t, double tol = 1e-12);
// one-sided limits of dG/dt at t = 0, m = 0: from above (+1) or below (-1)
double green_raw_dt_at_origin(int side, double tol = 1e-12);

double green_normalization(double delta);  // (ln delta - ln 4 - gamma) / (2 pi)
// G_delta(zeta) = G(zeta / delta) + normalization; zeta.real() must be on delta Z
GreenEvaluation green_free(cplx zeta, double delta, double tol = 1e-12);
double green_free_dy(cplx zeta, double delta, double tol = 1e-12);
double green_free_dyy(cplx zeta, double delta, double tol = 1e-12);

// G_Omega(pole, .) = G_delta(. - pole) - H, H harmonic with the same boundary values
GridFunction green_domain(const ColumnDomain& d, std::size_t pole_col, double pole_y, double h);

// ---------------------------------------------------------------------------
// Residue oracle for g_{k,m}(z) = 2^k z^{k-1} / ((z-1)^{k+2m} (z+1)^{k-2m}).

using Rational = boost::multiprecision::cpp_rational;

Rational residue_gkm(int k, int m, int pole);
// sum over k <= kmax of (2it)^k / k! (Res(g_{k,m}, 1) + Res(g_{k,m}, -1))
cplx residue_series_sum(int m, double t, int kmax);

cplx f_zeta(int m, double t, cplx z);
// |integral of f_zeta around the annulus r < |z| < R|, which must vanish
double check_fzeta_closed(int m, double t, double r = 0.5, double R = 2.0, double tol = 1e-13);

}  // namespace sdqi
