#pragma once

#include <optional>
#include <vector>

#include "sdqi/core.hpp"

namespace sdqi {

// Columns of the semi-discrete lattice are indexed by a quarter index q, with
// x = q * delta / 4.  q = 0 mod 4 is primal, 2 mod 4 dual, odd q mid-edge.
// medial is only used for grids spanning both primal and dual columns
enum class Role { primal, dual, midedge, medial };

inline int mod4(int q) { return ((q % 4) + 4) % 4; }

struct ColumnCoord {
  int q = 0;

  Role role() const {
    int r = mod4(q);
    if (r == 0) return Role::primal;
    if (r == 2) return Role::dual;
    return Role::midedge;
  }
  double x(double delta) const { return q * delta / 4.0; }
  static ColumnCoord nearest(double x, double delta) {
    return ColumnCoord{static_cast<int>(std::llround(4.0 * x / delta))};
  }
  // medial neighbours of a mid-edge column
  int west() const { return q - 1; }
  int east() const { return q + 1; }
};

enum class Arc { wired, free, mark_a, mark_b };

struct LatticePoint {
  int q = 0;
  double y = 0;
  bool operator==(const LatticePoint&) const = default;
};

struct BoundaryEdge {
  LatticePoint from, to;
  Arc arc = Arc::wired;
  bool vertical() const { return from.q == to.q; }
  bool contains(int q, double y, double eps = 1e-12) const;
};

struct Interval {
  double lo = 0, hi = 0;
  bool empty() const { return !(lo < hi); }
  bool contains(double y) const { return lo < y && y < hi; }
  bool contains_closed(double y, double eps = 0) const { return lo - eps <= y && y <= hi + eps; }
  double length() const { return empty() ? 0.0 : hi - lo; }
};

struct MidedgeColumn {
  int q = 0;
  Interval span;
  Arc bottom = Arc::free, top = Arc::free;
};

struct MedialColumn {
  int q = 0;
  Interval interior;                 // open interior part of the column, may be empty
  bool attached_lo = false;          // bottom end on the wired arc (primal) / free arc (dual)
  bool attached_hi = false;
  std::vector<Interval> walls;       // vertical boundary pieces lying on this column
  bool on_wall(double y, double eps = 1e-12) const {
    for (const auto& w : walls)
      if (w.contains_closed(y, eps)) return true;
    return false;
  }
};

// Marked mid-edge: its column, height, and whether the column ends there at its top.
struct Mark {
  int q = 0;
  double y = 0;
  bool at_top = false;
};

class DobrushinDomain {
 public:
  DobrushinDomain() = default;
  // boundary: counterclockwise closed list of edges (last.to == first.from)
  DobrushinDomain(double delta, std::vector<BoundaryEdge> boundary);

  double delta() const { return delta_; }
  const std::vector<BoundaryEdge>& boundary() const { return boundary_; }
  bool has_marks() const { return a_.has_value(); }
  const Mark& a() const;
  const Mark& b() const;

  int q_min() const { return q_min_; }
  int q_max() const { return q_max_; }

  const MidedgeColumn* midedge(int q) const;
  const MedialColumn* medial(int q) const;
  Interval span(int q) const;  // mid-edge span or medial interior, empty if absent

  std::vector<int> midedge_columns() const;
  std::vector<int> columns(Role role) const;           // medial columns with interior or boundary walls
  std::vector<int> interior_columns(Role role) const;  // medial columns with non-empty interior

  // arc data as sub-paths of the boundary
  std::vector<BoundaryEdge> arc_edges(Arc arc) const;
  double signed_area() const;

  // which arc a boundary point belongs to (marks included), nullopt if not on boundary
  std::optional<Arc> arc_at(int q, double y, double eps = 1e-12) const;

  bool operator==(const DobrushinDomain& o) const;

 private:
  void derive();

  double delta_ = 1.0;
  std::vector<BoundaryEdge> boundary_;
  std::optional<Mark> a_, b_;
  int q_min_ = 0, q_max_ = 0;
  std::vector<MidedgeColumn> mid_;   // indexed by q - q_min_, only odd slots valid
  std::vector<MedialColumn> med_;    // indexed by q - q_min_, only even slots valid
  std::vector<char> has_mid_;
};

struct PlanePoint {
  double x = 0, y = 0;
};

// Axis-aligned simple polygon given by its vertices (either orientation).
using Polygon = std::vector<PlanePoint>;

Polygon rectangle(double x0, double y0, double x1, double y1);

DobrushinDomain semidiscretize(const Polygon& polygon, PlanePoint a, PlanePoint b, double delta);
// polygon with free boundary everywhere and no marks (RSW rectangles)
DobrushinDomain semidiscretize_free(const Polygon& polygon, double delta);

enum class Side { left, right, bottom, top };
struct BoundaryPos {
  Side side = Side::left;
  double frac = 0.5;  // along the side, from the bottom or from the left
};

// Rectangle of width n_cols*delta and the given height whose primal columns sit
// at x = 0, delta, ..., (n_cols-1)*delta.
DobrushinDomain build_rectangle_dobrushin(int n_cols, double height, double delta, BoundaryPos a_side,
                                          BoundaryPos b_side);
DobrushinDomain build_free_rectangle(int n_cols, double height, double delta);

// Hausdorff distance between the boundary of a semi-discrete domain and a polygon boundary.
double boundary_hausdorff(const DobrushinDomain& d, const Polygon& polygon);

enum class ExtSide { primal, dual };

struct AddedSegment {
  int q = 0;              // column of the new layer
  Interval span;          // degenerate (lo == hi) for caps on horizontal edges
  int attached_q = 0;     // boundary column of the base domain it hangs off
  double attached_y = 0;  // for caps: the height of the horizontal edge
  bool cap = false;
};

struct DoubledPoint {
  int q = 0;
  double y = 0;
  int side = 0;  // +1 / -1: which side of the slit this copy belongs to
};

struct ExtendedDomain {
  DobrushinDomain base;
  ExtSide side = ExtSide::primal;
  std::vector<AddedSegment> added_columns;
  std::vector<DoubledPoint> doubled_points;

  // all medial columns of the extension with their spans, base first
  std::vector<std::pair<int, Interval>> columns() const;
  DobrushinDomain strip() const { return base; }
};

ExtendedDomain modify_boundary(const DobrushinDomain& domain, ExtSide side);

// Direction tau of a mid-edge column: nu if the east neighbour is dual, i*nu otherwise.
cplx tau_direction(int q);
// Unit tangent of the boundary at a boundary point, oriented from b to a along each arc.
cplx tau_direction(const DobrushinDomain& d, LatticePoint p);

}  // namespace sdqi
