#include "sdqi/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdqi {

namespace {

constexpr double kEps = 1e-12;

bool between(double v, double a, double b, double eps) {
  return std::min(a, b) - eps <= v && v <= std::max(a, b) + eps;
}

std::string fmt_point(const LatticePoint& p) {
  std::ostringstream s;
  s << "(q=" << p.q << ", y=" << p.y << ")";
  return s.str();
}

// Closed axis-aligned segments in (q, y) coordinates; q is scaled to keep the test exact.
bool segments_touch(const BoundaryEdge& e, const BoundaryEdge& f) {
  double ex0 = std::min(e.from.q, e.to.q), ex1 = std::max(e.from.q, e.to.q);
  double ey0 = std::min(e.from.y, e.to.y), ey1 = std::max(e.from.y, e.to.y);
  double fx0 = std::min(f.from.q, f.to.q), fx1 = std::max(f.from.q, f.to.q);
  double fy0 = std::min(f.from.y, f.to.y), fy1 = std::max(f.from.y, f.to.y);
  return ex0 <= fx1 && fx0 <= ex1 && ey0 <= fy1 + kEps && fy0 <= ey1 + kEps;
}

cplx edge_unit(const BoundaryEdge& e) {
  if (e.vertical()) return e.to.y > e.from.y ? kI : -kI;
  return e.to.q > e.from.q ? cplx{1, 0} : cplx{-1, 0};
}

}  // namespace

bool BoundaryEdge::contains(int q, double y, double eps) const {
  if (vertical()) return q == from.q && between(y, from.y, to.y, eps);
  return std::abs(y - from.y) <= eps && std::min(from.q, to.q) <= q && q <= std::max(from.q, to.q);
}

DobrushinDomain::DobrushinDomain(double delta, std::vector<BoundaryEdge> boundary)
    : delta_(delta), boundary_(std::move(boundary)) {
  require(delta_ > 0 && std::isfinite(delta_), "mesh must be positive");
  const std::size_t n = boundary_.size();
  require(n >= 4, "boundary needs at least four edges");

  int n_a = 0, n_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = boundary_[i];
    const auto& nx = boundary_[(i + 1) % n];
    require(e.to == nx.from, "boundary does not close at " + fmt_point(e.to));
    require(mod4(e.from.q) % 2 == 0 && mod4(e.to.q) % 2 == 0,
            "boundary vertices must lie on primal or dual columns");
    bool vert = e.vertical(), horiz = e.from.y == e.to.y;
    require(vert != horiz, "boundary edge is degenerate or not axis-aligned at " + fmt_point(e.from));
    if (vert) {
      require(e.arc == Arc::wired || e.arc == Arc::free, "marked edges must be horizontal");
      int want = e.arc == Arc::wired ? 0 : 2;
      require(mod4(e.from.q) == want, "wired verticals lie on primal columns, free verticals on dual ones");
    } else {
      int r0 = mod4(e.from.q), r1 = mod4(e.to.q);
      switch (e.arc) {
        case Arc::wired: require(r0 == 0 && r1 == 0, "wired horizontal edge must join primal vertices"); break;
        case Arc::free: require(r0 == 2 && r1 == 2, "free horizontal edge must join dual vertices"); break;
        case Arc::mark_a:
          require(r0 == 2 && r1 == 0 && std::abs(e.to.q - e.from.q) == 2, "mark a must run dual -> primal");
          ++n_a;
          break;
        case Arc::mark_b:
          require(r0 == 0 && r1 == 2 && std::abs(e.to.q - e.from.q) == 2, "mark b must run primal -> dual");
          ++n_b;
          break;
      }
    }
    // consecutive collinear edges only where the arc changes, and never backtracking
    if (e.vertical() == nx.vertical()) {
      require(e.arc != nx.arc, "collinear consecutive edges with the same arc");
      require(std::real(edge_unit(e) * std::conj(edge_unit(nx))) > 0, "boundary backtracks");
    }
  }
  require((n_a == 0 && n_b == 0) || (n_a == 1 && n_b == 1), "need exactly one mark a and one mark b");

  if (n_a == 1) {
    std::size_t ia = 0;
    while (boundary_[ia].arc != Arc::mark_a) ++ia;
    // after a: wired edges up to b, then free edges back to a
    std::size_t i = (ia + 1) % n;
    int n_wired = 0, n_free = 0;
    while (boundary_[i].arc == Arc::wired) ++n_wired, i = (i + 1) % n;
    require(boundary_[i].arc == Arc::mark_b, "arcs out of order: expected a, wired, b, free");
    i = (i + 1) % n;
    while (boundary_[i].arc == Arc::free) ++n_free, i = (i + 1) % n;
    require(i == ia, "arcs out of order: expected a, wired, b, free");
    require(n_wired > 0 && n_free > 0, "both arcs must be non-empty");
  }

  require(signed_area() > 0, "boundary must be counterclockwise");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      require(!segments_touch(boundary_[i], boundary_[j]), "boundary is not simple");
    }

  derive();
}

double DobrushinDomain::signed_area() const {
  double a = 0;
  for (const auto& e : boundary_) {
    double x0 = e.from.q * delta_ / 4, x1 = e.to.q * delta_ / 4;
    a += x0 * e.to.y - x1 * e.from.y;
  }
  return a / 2;
}

void DobrushinDomain::derive() {
  q_min_ = q_max_ = boundary_.front().from.q;
  for (const auto& e : boundary_) {
    q_min_ = std::min({q_min_, e.from.q, e.to.q});
    q_max_ = std::max({q_max_, e.from.q, e.to.q});
  }
  const std::size_t width = static_cast<std::size_t>(q_max_ - q_min_ + 1);
  mid_.assign(width, {});
  med_.assign(width, {});
  has_mid_.assign(width, 0);

  for (int q = q_min_ + 1; q < q_max_; q += 2) {
    std::vector<const BoundaryEdge*> hits;
    for (const auto& e : boundary_)
      if (!e.vertical() && std::min(e.from.q, e.to.q) < q && q < std::max(e.from.q, e.to.q)) hits.push_back(&e);
    if (hits.empty()) continue;
    require(hits.size() == 2, "domain is not column-convex at q=" + std::to_string(q));
    if (hits[0]->from.y > hits[1]->from.y) std::swap(hits[0], hits[1]);
    require(hits[0]->to.q > hits[0]->from.q && hits[1]->to.q < hits[1]->from.q,
            "inconsistent orientation at q=" + std::to_string(q));
    auto& m = mid_[q - q_min_];
    m.q = q;
    m.span = {hits[0]->from.y, hits[1]->from.y};
    m.bottom = hits[0]->arc;
    m.top = hits[1]->arc;
    has_mid_[q - q_min_] = 1;
  }

  for (int q = q_min_; q <= q_max_; q += 2) {
    auto& c = med_[q - q_min_];
    c.q = q;
    const auto* w = midedge(q - 1);
    const auto* e = midedge(q + 1);
    if (w && e) {
      c.interior = {std::max(w->span.lo, e->span.lo), std::min(w->span.hi, e->span.hi)};
      if (c.interior.empty()) c.interior = {};
    }
    for (const auto& be : boundary_)
      if (be.vertical() && be.from.q == q) c.walls.push_back({std::min(be.from.y, be.to.y), std::max(be.from.y, be.to.y)});
    std::sort(c.walls.begin(), c.walls.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    if (!c.interior.empty()) {
      Arc want = mod4(q) == 0 ? Arc::wired : Arc::free;
      auto attached = [&](double y) {
        for (const auto& be : boundary_)
          if (be.arc == want && be.contains(q, y)) return true;
        return false;
      };
      c.attached_lo = attached(c.interior.lo);
      c.attached_hi = attached(c.interior.hi);
    }
  }

  for (const auto& e : boundary_) {
    if (e.arc != Arc::mark_a && e.arc != Arc::mark_b) continue;
    Mark m;
    m.q = (e.from.q + e.to.q) / 2;
    m.y = e.from.y;
    const auto* col = midedge(m.q);
    require(col != nullptr, "marked edge outside the domain");
    m.at_top = std::abs(col->span.hi - m.y) < kEps;
    (e.arc == Arc::mark_a ? a_ : b_) = m;
  }
}

const Mark& DobrushinDomain::a() const {
  require(a_.has_value(), "domain has no marks");
  return *a_;
}
const Mark& DobrushinDomain::b() const {
  require(b_.has_value(), "domain has no marks");
  return *b_;
}

const MidedgeColumn* DobrushinDomain::midedge(int q) const {
  if (q <= q_min_ || q >= q_max_ || mod4(q) % 2 == 0) return nullptr;
  return has_mid_[q - q_min_] ? &mid_[q - q_min_] : nullptr;
}

const MedialColumn* DobrushinDomain::medial(int q) const {
  if (q < q_min_ || q > q_max_ || mod4(q) % 2 == 1) return nullptr;
  return &med_[q - q_min_];
}

Interval DobrushinDomain::span(int q) const {
  if (mod4(q) % 2 == 1) {
    const auto* m = midedge(q);
    return m ? m->span : Interval{};
  }
  const auto* c = medial(q);
  return c ? c->interior : Interval{};
}

std::vector<int> DobrushinDomain::midedge_columns() const {
  std::vector<int> out;
  for (int q = q_min_ + 1; q < q_max_; q += 2)
    if (midedge(q)) out.push_back(q);
  return out;
}

std::vector<int> DobrushinDomain::columns(Role role) const {
  std::vector<int> out;
  if (role == Role::midedge) return midedge_columns();
  int want = role == Role::primal ? 0 : 2;
  for (int q = q_min_; q <= q_max_; q += 2) {
    const auto& c = med_[q - q_min_];
    if (mod4(q) == want && (!c.interior.empty() || !c.walls.empty())) out.push_back(q);
  }
  return out;
}

std::vector<int> DobrushinDomain::interior_columns(Role role) const {
  std::vector<int> out;
  int want = role == Role::primal ? 0 : 2;
  for (int q = q_min_; q <= q_max_; q += 2)
    if (mod4(q) == want && !med_[q - q_min_].interior.empty()) out.push_back(q);
  return out;
}

std::vector<BoundaryEdge> DobrushinDomain::arc_edges(Arc arc) const {
  std::vector<BoundaryEdge> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < boundary_.size(); ++i)
    if (boundary_[i].arc == Arc::mark_a) start = i;
  for (std::size_t k = 0; k < boundary_.size(); ++k) {
    const auto& e = boundary_[(start + k) % boundary_.size()];
    if (e.arc == arc) out.push_back(e);
  }
  return out;
}

std::optional<Arc> DobrushinDomain::arc_at(int q, double y, double eps) const {
  std::optional<Arc> found;
  for (const auto& e : boundary_) {
    if (!e.contains(q, y, eps)) continue;
    if (e.arc == Arc::mark_a || e.arc == Arc::mark_b) return e.arc;
    found = e.arc;
  }
  return found;
}

bool DobrushinDomain::operator==(const DobrushinDomain& o) const {
  if (delta_ != o.delta_ || boundary_.size() != o.boundary_.size()) return false;
  for (std::size_t i = 0; i < boundary_.size(); ++i) {
    const auto &e = boundary_[i], &f = o.boundary_[i];
    if (!(e.from == f.from) || !(e.to == f.to) || e.arc != f.arc) return false;
  }
  return true;
}

Polygon rectangle(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

namespace {

struct Piece {
  bool vertical = false;
  double fixed = 0;      // x for vertical pieces, y for horizontal ones
  double from = 0, to = 0;  // running coordinate
  Arc arc = Arc::free;
  int q = 0;             // snapped column for vertical pieces
};

Polygon clean_polygon(const Polygon& in) {
  Polygon p;
  for (const auto& v : in)
    if (p.empty() || std::hypot(v.x - p.back().x, v.y - p.back().y) > 1e-14) p.push_back(v);
  while (p.size() > 1 && std::hypot(p.front().x - p.back().x, p.front().y - p.back().y) <= 1e-14) p.pop_back();
  require(p.size() >= 4, "polygon needs at least four vertices");
  // drop vertices in the middle of straight runs
  bool changed = true;
  while (changed && p.size() > 4) {
    changed = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto& a = p[(i + p.size() - 1) % p.size()];
      const auto& b = p[i];
      const auto& c = p[(i + 1) % p.size()];
      if ((a.x == b.x && b.x == c.x) || (a.y == b.y && b.y == c.y)) {
        p.erase(p.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    require(a.x == b.x || a.y == b.y, "polygon is not axis-aligned");
  }
  double area = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    area += a.x * b.y - b.x * a.y;
  }
  require(area != 0, "polygon has zero area");
  if (area < 0) std::reverse(p.begin(), p.end());
  // simplicity check on the cleaned polygon
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const auto &a0 = p[i], &a1 = p[(i + 1) % n], &b0 = p[j], &b1 = p[(j + 1) % n];
      bool hit = std::min(a0.x, a1.x) <= std::max(b0.x, b1.x) && std::min(b0.x, b1.x) <= std::max(a0.x, a1.x) &&
                 std::min(a0.y, a1.y) <= std::max(b0.y, b1.y) && std::min(b0.y, b1.y) <= std::max(a0.y, a1.y);
      require(!hit, "polygon self-intersects");
    }
  return p;
}

// index of the edge holding pt strictly inside it, and the distance along it
std::pair<std::size_t, double> locate(const Polygon& p, PlanePoint pt) {
  const double tol = 1e-12;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(std::hypot(pt.x - p[i].x, pt.y - p[i].y) > tol, "marked point sits on a polygon vertex");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    if (a.x == b.x && std::abs(pt.x - a.x) <= tol && between(pt.y, a.y, b.y, 0)) return {i, std::abs(pt.y - a.y)};
    if (a.y == b.y && std::abs(pt.y - a.y) <= tol && between(pt.x, a.x, b.x, 0)) return {i, std::abs(pt.x - a.x)};
  }
  fail(ErrorKind::invalid_input, "marked point is not on the polygon boundary");
}

// smallest (up) or largest (!up) q = r mod 4 with q >= xq (resp. <= xq)
int snap(double xq, int r, bool up) {
  const double tol = 1e-9;
  if (up) {
    double k = std::ceil((xq - r) / 4.0 - tol);
    return static_cast<int>(k) * 4 + r;
  }
  double k = std::floor((xq - r) / 4.0 + tol);
  return static_cast<int>(k) * 4 + r;
}

int nearest_with_residue(double xq, int r) {
  int lo = snap(xq, r, false);
  int hi = lo + 4;
  return (xq - lo <= hi - xq) ? lo : hi;  // tie goes to the smaller q
}

DobrushinDomain build(const Polygon& poly_in, std::optional<PlanePoint> a, std::optional<PlanePoint> b,
                      double delta) {
  require(delta > 0, "mesh must be positive");
  Polygon p = clean_polygon(poly_in);
  const std::size_t n = p.size();

  // split the boundary into pieces carrying one arc each, starting at a
  std::vector<Piece> pieces;
  auto piece_of = [&](PlanePoint s, PlanePoint t, Arc arc) {
    Piece pc;
    pc.vertical = s.x == t.x;
    pc.fixed = pc.vertical ? s.x : s.y;
    pc.from = pc.vertical ? s.y : s.x;
    pc.to = pc.vertical ? t.y : t.x;
    pc.arc = arc;
    return pc;
  };
  // indices into pieces after which a mark is inserted
  std::optional<std::size_t> mark_a_after, mark_b_after;

  if (a) {
    require(b.has_value(), "both marks are needed");
    require(std::hypot(a->x - b->x, a->y - b->y) > 0, "marks coincide");
    // arclength positions along the ccw boundary
    std::vector<double> s_vert(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& u = p[i];
      const auto& v = p[(i + 1) % n];
      s_vert[i + 1] = s_vert[i] + std::abs(v.x - u.x) + std::abs(v.y - u.y);
    }
    const double perim = s_vert[n];
    auto [ia, da] = locate(p, *a);
    auto [ib, db] = locate(p, *b);
    const double sa = s_vert[ia] + da;
    auto offset = [&](double s) { return std::fmod(s - sa + 2 * perim, perim); };
    struct Stop {
      double off;
      PlanePoint pt;
      bool is_b;
    };
    std::vector<Stop> stops;
    for (std::size_t i = 0; i < n; ++i) stops.push_back({offset(s_vert[i]), p[i], false});
    stops.push_back({offset(s_vert[ib] + db), *b, true});
    std::sort(stops.begin(), stops.end(), [](const Stop& x, const Stop& y) { return x.off < y.off; });
    stops.push_back({perim, *a, false});
    PlanePoint cur = *a;
    Arc arc = Arc::wired;
    for (const auto& st : stops) {
      pieces.push_back(piece_of(cur, st.pt, arc));
      cur = st.pt;
      if (st.is_b) {
        mark_b_after = pieces.size() - 1;
        arc = Arc::free;
      }
    }
    mark_a_after = pieces.size() - 1;
  } else {
    for (std::size_t i = 0; i < n; ++i) pieces.push_back(piece_of(p[i], p[(i + 1) % n], Arc::free));
  }
  // drop zero-length pieces (marks at the far end of an edge never produce them, but guard anyway)
  for (auto& pc : pieces) require(pc.from != pc.to, "marked point too close to a vertex");

  for (auto& pc : pieces) {
    if (!pc.vertical) continue;
    int r = pc.arc == Arc::wired ? 0 : 2;
    bool interior_east = pc.to < pc.from;  // going down on a ccw boundary
    pc.q = snap(4.0 * pc.fixed / delta, r, interior_east);
  }

  struct Node {
    LatticePoint v;
    Arc out;
  };
  std::vector<Node> nodes;
  const std::size_t m = pieces.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Piece& cur = pieces[k];
    const Piece& nxt = pieces[(k + 1) % m];
    bool is_a = mark_a_after && *mark_a_after == k;
    bool is_b = mark_b_after && *mark_b_after == k;
    if (is_a || is_b) {
      Arc mk = is_a ? Arc::mark_a : Arc::mark_b;
      if (cur.vertical) {
        require(nxt.vertical, "internal: mark between mismatched pieces");
        double y = cur.to;
        require(std::abs(nxt.q - cur.q) == 2, "mesh too coarse around a marked point");
        nodes.push_back({{cur.q, y}, mk});
        nodes.push_back({{nxt.q, y}, nxt.arc});
      } else {
        double y = cur.fixed;
        bool east = cur.to > cur.from;
        // mid-edge residue: a east 3, a west 1, b east 1, b west 3
        int r = (is_a == east) ? 3 : 1;
        int qm = nearest_with_residue(4.0 * cur.to / delta, r);
        int s = east ? 1 : -1;
        nodes.push_back({{qm - s, y}, mk});
        nodes.push_back({{qm + s, y}, nxt.arc});
      }
      continue;
    }
    if (cur.vertical == nxt.vertical) fail(ErrorKind::invalid_input, "internal: collinear pieces without a mark");
    if (cur.vertical)
      nodes.push_back({{cur.q, nxt.fixed}, nxt.arc});
    else
      nodes.push_back({{nxt.q, cur.fixed}, nxt.arc});
  }

  // nodes[k] starts the edge towards nodes[k+1]; merge zero-length edges
  std::vector<Node> clean;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Node& nx = nodes[(k + 1) % nodes.size()];
    if (nodes[k].v == nx.v) {
      require(nodes[k].out != Arc::mark_a && nodes[k].out != Arc::mark_b, "mesh too coarse around a marked point");
      continue;
    }
    clean.push_back(nodes[k]);
  }
  std::vector<BoundaryEdge> edges;
  for (std::size_t k = 0; k < clean.size(); ++k)
    edges.push_back({clean[k].v, clean[(k + 1) % clean.size()].v, clean[k].out});
  // merge collinear runs with equal arcs
  bool merged = true;
  while (merged && edges.size() > 4) {
    merged = false;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      auto& e = edges[k];
      auto& f = edges[(k + 1) % edges.size()];
      bool collinear = e.vertical() ? (f.vertical() && e.from.q == f.to.q) : (!f.vertical() && e.from.y == f.to.y);
      if (e.arc == f.arc && collinear) {
        require(std::real(edge_unit(e) * std::conj(edge_unit(f))) > 0, "mesh too coarse: boundary folds back");
        e.to = f.to;
        edges.erase(edges.begin() + static_cast<long>((k + 1) % edges.size()));
        merged = true;
        break;
      }
    }
  }
  // keep the mark a edge first for readability
  if (a) {
    auto it = std::find_if(edges.begin(), edges.end(), [](const BoundaryEdge& e) { return e.arc == Arc::mark_a; });
    std::rotate(edges.begin(), it, edges.end());
  }
  try {
    return DobrushinDomain(delta, std::move(edges));
  } catch (const Error& err) {
    fail(ErrorKind::invalid_input, std::string("mesh too coarse for this polygon: ") + err.what());
  }
}

}  // namespace

DobrushinDomain semidiscretize(const Polygon& polygon, PlanePoint a, PlanePoint b, double delta) {
  return build(polygon, a, b, delta);
}

DobrushinDomain semidiscretize_free(const Polygon& polygon, double delta) {
  return build(polygon, std::nullopt, std::nullopt, delta);
}

namespace {
PlanePoint rect_point(BoundaryPos pos, double x0, double x1, double h) {
  require(pos.frac > 0 && pos.frac < 1, "boundary position must be strictly inside a side");
  switch (pos.side) {
    case Side::left: return {x0, pos.frac * h};
    case Side::right: return {x1, pos.frac * h};
    case Side::bottom: return {x0 + pos.frac * (x1 - x0), 0};
    case Side::top: return {x0 + pos.frac * (x1 - x0), h};
  }
  return {};
}
}  // namespace

DobrushinDomain build_rectangle_dobrushin(int n_cols, double height, double delta, BoundaryPos a_side,
                                          BoundaryPos b_side) {
  require(n_cols >= 2, "need at least two primal columns");
  require(height > 0, "height must be positive");
  require(delta > 0, "mesh must be positive");
  double x0 = -delta / 2, x1 = (n_cols - 0.5) * delta;
  PlanePoint a = rect_point(a_side, x0, x1, height);
  PlanePoint b = rect_point(b_side, x0, x1, height);
  require(a.x != b.x || a.y != b.y, "marks coincide");
  return semidiscretize(rectangle(x0, 0, x1, height), a, b, delta);
}

DobrushinDomain build_free_rectangle(int n_cols, double height, double delta) {
  require(n_cols >= 1, "need at least one primal column");
  require(height > 0, "height must be positive");
  return semidiscretize_free(rectangle(-delta / 2, 0, (n_cols - 0.5) * delta, height), delta);
}

namespace {
double point_segment(double px, double py, double ax, double ay, double bx, double by) {
  double dx = bx - ax, dy = by - ay;
  double L = dx * dx + dy * dy;
  double t = L > 0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / L, 0.0, 1.0) : 0.0;
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

using Seg = std::array<double, 4>;

double directed(const std::vector<Seg>& from, const std::vector<Seg>& to, double step) {
  double worst = 0;
  for (const auto& s : from) {
    double len = std::hypot(s[2] - s[0], s[3] - s[1]);
    int k = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i <= k; ++i) {
      double px = s[0] + (s[2] - s[0]) * i / k, py = s[1] + (s[3] - s[1]) * i / k;
      double best = 1e300;
      for (const auto& t : to) best = std::min(best, point_segment(px, py, t[0], t[1], t[2], t[3]));
      worst = std::max(worst, best);
    }
  }
  return worst;
}
}  // namespace

double boundary_hausdorff(const DobrushinDomain& d, const Polygon& polygon) {
  std::vector<Seg> A, B;
  for (const auto& e : d.boundary())
    A.push_back({e.from.q * d.delta() / 4, e.from.y, e.to.q * d.delta() / 4, e.to.y});
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const auto& p = polygon[i];
    const auto& q = polygon[(i + 1) % polygon.size()];
    B.push_back({p.x, p.y, q.x, q.y});
  }
  double step = d.delta() / 64;
  return std::max(directed(A, B, step), directed(B, A, step));
}

std::vector<std::pair<int, Interval>> ExtendedDomain::columns() const {
  std::vector<std::pair<int, Interval>> out;
  for (int q = base.q_min(); q <= base.q_max(); q += 2) {
    const auto* c = base.medial(q);
    if (!c->interior.empty()) out.push_back({q, c->interior});
    for (const auto& w : c->walls) out.push_back({q, w});
  }
  for (const auto& s : added_columns) out.push_back({s.q, s.span});
  return out;
}

ExtendedDomain modify_boundary(const DobrushinDomain& domain, ExtSide side) {
  ExtendedDomain ext;
  ext.base = domain;
  ext.side = side;
  // the arc that gets covered by the new layer
  Arc covered = side == ExtSide::primal ? Arc::free : Arc::wired;
  for (const auto& e : domain.boundary()) {
    if (e.arc != covered) continue;
    if (e.vertical()) {
      bool interior_east = e.to.y < e.from.y;
      AddedSegment s;
      s.q = e.from.q + (interior_east ? -2 : 2);
      s.span = {std::min(e.from.y, e.to.y), std::max(e.from.y, e.to.y)};
      s.attached_q = e.from.q;
      ext.added_columns.push_back(s);
    } else {
      // columns of the new role crossing this horizontal edge get a boundary cap
      int r = side == ExtSide::primal ? 0 : 2;
      int lo = std::min(e.from.q, e.to.q), hi = std::max(e.from.q, e.to.q);
      for (int q = lo + 1; q < hi; ++q) {
        if (mod4(q) != r) continue;
        AddedSegment s;
        s.q = q;
        s.span = {e.from.y, e.from.y};
        s.attached_q = q - 2;
        s.attached_y = e.from.y;
        s.cap = true;
        ext.added_columns.push_back(s);
      }
    }
  }
  // overlaps between the new layer and the base domain (or itself) become slit points
  auto overlap = [](const Interval& x, const Interval& y) {
    return Interval{std::max(x.lo, y.lo), std::min(x.hi, y.hi)};
  };
  auto all = ext.columns();
  std::size_t n_base = all.size() - ext.added_columns.size();
  for (std::size_t i = n_base; i < all.size(); ++i) {
    if (ext.added_columns[i - n_base].cap) continue;
    for (std::size_t j = 0; j < i; ++j) {
      if (all[j].first != all[i].first) continue;
      Interval o = overlap(all[i].second, all[j].second);
      if (o.lo > o.hi) continue;
      double y = (o.lo + o.hi) / 2;
      ext.doubled_points.push_back({all[i].first, y, +1});
      ext.doubled_points.push_back({all[i].first, y, -1});
    }
  }
  return ext;
}

cplx tau_direction(int q) {
  require(mod4(q) % 2 == 1, "tau_direction needs a mid-edge column");
  return mod4(q) == 1 ? kNu : kI * kNu;
}

cplx tau_direction(const DobrushinDomain& d, LatticePoint p) {
  const BoundaryEdge* hit = nullptr;
  int count = 0;
  for (const auto& e : d.boundary()) {
    if (!e.contains(p.q, p.y)) continue;
    if (e.arc == Arc::mark_a || e.arc == Arc::mark_b) fail(ErrorKind::marked_point, "tangent undefined at a marked edge");
    hit = &e;
    ++count;
  }
  require(count > 0, "point is not on the boundary");
  require(count == 1, "tangent undefined at a boundary corner");
  cplx u = edge_unit(*hit);
  return hit->arc == Arc::wired ? -u : u;
}

}  // namespace sdqi
