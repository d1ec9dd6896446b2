#pragma once

#include <iosfwd>
#include <vector>

#include "sdqi/observable.hpp"

namespace sdqi {

// F = a(y) tau(q) on every mid-edge column, a real.
struct SholSolution {
  MidedgeGrid grid;
  std::vector<std::vector<double>> a;  // per column, node k at index k - k0
  double holo_residual = 0;      // worst central-difference residual of the ODE at interior nodes
  double boundary_residual = 0;  // worst boundary row
  double normalization_residual = 0;  // relative
  double system_residual = 0;    // max-norm residual of the assembled rows
  std::size_t unknowns = 0;

  double amplitude(int q, std::size_t k) const;  // zero outside the domain
  cplx F(int q, std::size_t k) const;
  MidedgeField field() const;
};

struct BvpOptions {
  double norm_target = 1.0;   // F(b) = norm_target * tau(b) / sqrt(delta)
  bool reverse_rows = false;  // assemble rows in reverse order (uniqueness probe)
};

// On each column the amplitude satisfies a' = s (a(q+2) - a(q-2)) / delta with
// s = -1 on nu columns and +1 on i nu columns, neighbours being zero beyond a
// medial wall. Each node interval gives one trapezoid row. Column ends are
// paired across the boundary as the interface U-turns there, which is the
// parallelism of the medial observable on the arcs; the end at b is normalized.
SholSolution solve_shol_bvp(const DobrushinDomain& d, double h_y, BvpOptions opt = {});

// ---------------------------------------------------------------------------
// Continuum reference on an axis-aligned polygon.

struct ContinuumReference {
  double x0 = 0, y0 = 0, h = 0;
  int nx = 0, ny = 0;                  // nodes per axis
  std::vector<char> inside;            // node kind: 0 outside, 1 interior, 2 boundary
  std::vector<double> hval;            // harmonic h, 1 on the wired arc and 0 on the free arc
  std::vector<cplx> f;                 // sqrt(h_y + i h_x) at interior nodes, continuous branch

  std::size_t id(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i); }
  // bilinear interpolation inside cells with four non-outside corners
  double h_at(double x, double y) const;
  cplx f_at(double x, double y) const;  // needs four interior corners
  bool f_defined(double x, double y) const;
};

// Polygon vertices must lie on the grid of step h through the first vertex.
// The wired arc runs counterclockwise from a to b.
ContinuumReference continuum_reference(const Polygon& polygon, PlanePoint a, PlanePoint b, double h);

struct CompactRect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct ConvergenceRow {
  double delta = 0, hy = 0;
  double sup_err_F = 0, l2_err_F = 0, sup_err_H = 0;
  double holo_residual = 0;
  double wired_dev = 0, free_dev = 0;  // H boundary values
  int sign = 1;                        // branch of f matched by the medial observable
  std::size_t points = 0;
};

// For each delta: semidiscretize, solve, compare the medial observable with
// f = sqrt(Phi') and H with h on the compact.
std::vector<ConvergenceRow> convergence_report(const Polygon& polygon, PlanePoint a, PlanePoint b,
                                               const std::vector<double>& ladder, const CompactRect& compact,
                                               double continuum_h, double hy_fraction = 0.25);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);

}  // namespace sdqi
