#include "sdqi/percolation.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

namespace sdqi {

Configuration::Configuration(const DobrushinDomain& d) : q_min_(d.q_min()) {
  ev_.resize(static_cast<std::size_t>((d.q_max() - d.q_min()) / 2 + 1));
}

Configuration Configuration::from_points(const DobrushinDomain& d, const std::vector<std::pair<int, double>>& deaths,
                                         const std::vector<std::pair<int, double>>& bridges) {
  Configuration c(d);
  for (auto [q, y] : deaths) {
    require(mod4(q) == 0, "death points live on primal columns");
    require(c.has_column(q), "death point outside the domain");
    c.events(q).push_back(y);
  }
  for (auto [q, y] : bridges) {
    require(mod4(q) == 2, "bridges live on dual columns");
    require(c.has_column(q), "bridge outside the domain");
    c.events(q).push_back(y);
  }
  for (auto& v : c.ev_) std::sort(v.begin(), v.end());
  c.validate(d);
  return c;
}

std::size_t Configuration::n_deaths() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < ev_.size(); ++s)
    if (mod4(q_min_ + 2 * static_cast<int>(s)) == 0) n += ev_[s].size();
  return n;
}

std::size_t Configuration::n_bridges() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < ev_.size(); ++s)
    if (mod4(q_min_ + 2 * static_cast<int>(s)) == 2) n += ev_[s].size();
  return n;
}

void Configuration::insert(int q, double y) {
  auto& v = events(q);
  v.insert(std::upper_bound(v.begin(), v.end(), y), y);
}

void Configuration::erase(int q, std::size_t i) {
  auto& v = events(q);
  v.erase(v.begin() + static_cast<long>(i));
}

void Configuration::validate(const DobrushinDomain& d) const {
  require(q_min_ == d.q_min() && q_max() == d.q_max(), "configuration built for another domain");
  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    const auto& v = events(q);
    if (v.empty()) continue;
    Interval iv = d.medial(q)->interior;
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(iv.contains(v[i]), "point outside the column interior at q=" + std::to_string(q));
      if (i > 0) require(v[i - 1] < v[i], "points on a column must be strictly increasing");
    }
    if (q + 2 <= d.q_max()) {
      const auto& w = events(q + 2);
      for (double y : v) require(!std::binary_search(w.begin(), w.end(), y), "tie between neighbouring columns");
    }
  }
}

Configuration sample_ppp(const DobrushinDomain& d, double lambda, double mu, Rng& rng) {
  require(lambda >= 0 && mu >= 0, "intensities must be non-negative");
  Configuration c(d);
  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    double rate = mod4(q) == 0 ? lambda : mu;
    Interval iv = d.medial(q)->interior;
    if (iv.empty() || rate == 0) continue;
    std::poisson_distribution<int> pois(rate * iv.length());
    int n = pois(rng);
    auto& v = c.events(q);
    v.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v.push_back(iv.lo + iv.length() * rng.uniform());
    std::sort(v.begin(), v.end());
  }
  return c;
}

ClusterMap::ClusterMap(const Configuration& c, const DobrushinDomain& d, ClusterSide side, Bc bc)
    : q_min_(d.q_min()), config_(&c), domain_(&d), bc_(bc) {
  const int own = side == ClusterSide::primal ? 0 : 2;
  const std::size_t slots = static_cast<std::size_t>((d.q_max() - d.q_min()) / 2 + 1);
  col_offset_.assign(slots, -1);
  int n = 0;
  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    if (mod4(q) != own || d.medial(q)->interior.empty()) continue;
    col_offset_[static_cast<std::size_t>((q - q_min_) / 2)] = n;
    n += static_cast<int>(c.events(q).size()) + 1;
  }
  arc_node_ = n;
  parent_.resize(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) parent_[static_cast<std::size_t>(i)] = i;
  int comps = n;

  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    int off = col_offset_[static_cast<std::size_t>((q - q_min_) / 2)];
    if (off >= 0 && bc == Bc::wired_on_arc) {
      const auto* col = d.medial(q);
      int last = off + static_cast<int>(c.events(q).size());
      if (col->attached_lo) comps -= unite(off, arc_node_);
      if (col->attached_hi) comps -= unite(last, arc_node_);
    }
    if (mod4(q) == own) continue;
    for (double y : c.events(q)) {
      int l = locate(q - 2, y), r = locate(q + 2, y);
      if (l >= 0 && r >= 0) comps -= unite(l, r);
    }
  }
  // the arc node is one more component; merges into it were subtracted above
  count_ = comps + (bc == Bc::wired_on_arc ? 1 : 0);
}

int ClusterMap::locate(int q, double y) const {
  if (q < domain_->q_min() || q > domain_->q_max()) return -1;
  const auto* col = domain_->medial(q);
  int off = col_offset_[static_cast<std::size_t>((q - q_min_) / 2)];
  if (off >= 0 && col->interior.contains(y)) {
    const auto& v = config_->events(q);
    return off + static_cast<int>(std::upper_bound(v.begin(), v.end(), y) - v.begin());
  }
  if (bc_ == Bc::wired_on_arc && col->on_wall(y)) return arc_node_;
  return -1;
}

int ClusterMap::find(int id) const {
  auto i = static_cast<std::size_t>(id);
  while (parent_[i] != static_cast<int>(i)) {
    parent_[i] = parent_[static_cast<std::size_t>(parent_[i])];
    i = static_cast<std::size_t>(parent_[i]);
  }
  return static_cast<int>(i);
}

int ClusterMap::unite(int a, int b) {
  int ra = find(a), rb = find(b);
  if (ra == rb) return 0;
  if (ra > rb) std::swap(ra, rb);
  parent_[static_cast<std::size_t>(rb)] = ra;
  return 1;
}

int count_clusters(const Configuration& c, const DobrushinDomain& d, ClusterSide side, Bc bc) {
  return ClusterMap(c, d, side, bc).count();
}

bool connected(const Configuration& c, const DobrushinDomain& d, LatticePoint x, LatticePoint y, Bc bc) {
  require(mod4(x.q) == 0 && mod4(y.q) == 0, "connectivity is between primal points");
  ClusterMap m(c, d, ClusterSide::primal, bc);
  int ix = m.locate(x.q, x.y), iy = m.locate(y.q, y.y);
  require(ix >= 0 && iy >= 0, "point outside the primal part of the domain");
  return m.find(ix) == m.find(iy);
}

namespace {

// Strands of the loop picture: each mid-edge column is cut into pieces by the
// events of its two medial neighbours; piece ends are paired by U-turns.
class StrandGraph {
 public:
  StrandGraph(const Configuration& c, const DobrushinDomain& d) : d_(d) {
    q0_ = d.q_min() + 1;
    slot_.assign(static_cast<std::size_t>((d.q_max() - d.q_min()) / 2), -1);
    for (int q : d.midedge_columns()) {
      Col col;
      col.q = q;
      col.m = d.midedge(q);
      const std::vector<double> none;
      const auto& w = c.has_column(q - 1) ? c.events(q - 1) : none;
      const auto& e = c.has_column(q + 1) ? c.events(q + 1) : none;
      col.bp.reserve(w.size() + e.size());
      std::merge(w.begin(), w.end(), e.begin(), e.end(), std::back_inserter(col.bp));
      col.offset = n_pieces_;
      n_pieces_ += static_cast<int>(col.bp.size()) + 1;
      slot_[static_cast<std::size_t>((q - q0_) / 2)] = static_cast<int>(cols_.size());
      cols_.push_back(std::move(col));
    }
    piece_col_.resize(static_cast<std::size_t>(n_pieces_));
    for (std::size_t i = 0; i < cols_.size(); ++i)
      for (int k = 0; k <= static_cast<int>(cols_[i].bp.size()); ++k)
        piece_col_[static_cast<std::size_t>(cols_[i].offset + k)] = static_cast<int>(i);
    c_ = &c;
  }

  int n_pieces() const { return n_pieces_; }

  struct End {
    int piece = -1;
    int end = 0;  // 0 bottom, 1 top
  };

  // y range of a piece
  std::pair<double, double> range(int piece) const {
    const Col& col = cols_[static_cast<std::size_t>(piece_col_[static_cast<std::size_t>(piece)])];
    int k = piece - col.offset;
    double lo = k == 0 ? col.m->span.lo : col.bp[static_cast<std::size_t>(k - 1)];
    double hi = k == static_cast<int>(col.bp.size()) ? col.m->span.hi : col.bp[static_cast<std::size_t>(k)];
    return {lo, hi};
  }
  int column_q(int piece) const { return cols_[static_cast<std::size_t>(piece_col_[static_cast<std::size_t>(piece)])].q; }

  // boundary arc at a piece end, or nullopt if the end is an interior event
  std::optional<Arc> boundary_arc(End e) const {
    const Col& col = cols_[static_cast<std::size_t>(piece_col_[static_cast<std::size_t>(e.piece)])];
    int k = e.piece - col.offset;
    if (e.end == 0 && k == 0) return col.m->bottom;
    if (e.end == 1 && k == static_cast<int>(col.bp.size())) return col.m->top;
    return std::nullopt;
  }

  int first_piece(int q) const { return col_of(q).offset; }
  int last_piece(int q) const { return col_of(q).offset + static_cast<int>(col_of(q).bp.size()); }

  // partner end across the U-turn at this end, plus the winding of the hop (units of pi/2)
  std::pair<End, int> partner(End e) const {
    const Col& col = cols_[static_cast<std::size_t>(piece_col_[static_cast<std::size_t>(e.piece)])];
    int k = e.piece - col.offset;
    int q = col.q;
    int q2;
    double y;
    std::optional<Arc> arc = boundary_arc(e);
    if (arc) {
      // wired end hops across the dual neighbour, free end across the primal one
      int dual_nb = mod4(q - 1) == 2 ? q - 1 : q + 1;
      int prim_nb = mod4(q - 1) == 0 ? q - 1 : q + 1;
      int across = *arc == Arc::wired ? dual_nb : prim_nb;
      q2 = 2 * across - q;
      y = e.end == 0 ? col.m->span.lo : col.m->span.hi;
    } else {
      y = col.bp[static_cast<std::size_t>(e.end == 0 ? k - 1 : k)];
      const auto& w = c_->has_column(q - 1) ? c_->events(q - 1) : empty_;
      int across = std::binary_search(w.begin(), w.end(), y) ? q - 1 : q + 1;
      q2 = 2 * across - q;
    }
    const MidedgeColumn* m2 = d_.midedge(q2);
    if (!m2) fail(ErrorKind::corrupt, "U-turn leaves the domain at q=" + std::to_string(q));
    const Col& other = col_of(q2);
    End out;
    out.end = e.end;
    if (arc) {
      double y2 = e.end == 0 ? m2->span.lo : m2->span.hi;
      if (y2 != y) fail(ErrorKind::corrupt, "boundary U-turn between columns ending at different heights");
      out.piece = e.end == 0 ? other.offset : other.offset + static_cast<int>(other.bp.size());
    } else {
      auto it = std::lower_bound(other.bp.begin(), other.bp.end(), y);
      if (it == other.bp.end() || *it != y) fail(ErrorKind::corrupt, "event missing on the partner column");
      int j = static_cast<int>(it - other.bp.begin());
      out.piece = other.offset + (e.end == 0 ? j + 1 : j);
    }
    bool up = e.end == 1;
    bool east = q2 > q;
    int turn = (up == east) ? -2 : 2;
    return {out, turn};
  }

 private:
  struct Col {
    int q = 0;
    const MidedgeColumn* m = nullptr;
    std::vector<double> bp;
    int offset = 0;
  };
  const Col& col_of(int q) const {
    int s = slot_[static_cast<std::size_t>((q - q0_) / 2)];
    if (s < 0) fail(ErrorKind::corrupt, "no mid-edge column at q=" + std::to_string(q));
    return cols_[static_cast<std::size_t>(s)];
  }

  const DobrushinDomain& d_;
  const Configuration* c_ = nullptr;
  int q0_ = 0;
  std::vector<int> slot_;
  std::vector<Col> cols_;
  std::vector<int> piece_col_;
  int n_pieces_ = 0;
  const std::vector<double> empty_{};
};

// Walks from an entry end until a terminal end or back to the start; marks pieces visited.
InterfacePath walk(const StrandGraph& g, StrandGraph::End entry, std::vector<char>& visited, bool closed,
                   std::optional<Arc>* terminal) {
  InterfacePath path;
  int winding = 0;
  StrandGraph::End cur = entry;
  const std::size_t guard = static_cast<std::size_t>(g.n_pieces()) + 2;
  for (std::size_t step = 0; step <= guard; ++step) {
    if (visited[static_cast<std::size_t>(cur.piece)]) {
      if (closed && cur.piece == entry.piece && cur.end == entry.end) {
        path.total_winding = winding;
        return path;
      }
      fail(ErrorKind::corrupt, "trace revisits a strand");
    }
    visited[static_cast<std::size_t>(cur.piece)] = 1;
    auto [lo, hi] = g.range(cur.piece);
    Run r;
    r.q = g.column_q(cur.piece);
    r.dir = cur.end == 0 ? VDir::up : VDir::down;
    r.y_start = cur.end == 0 ? lo : hi;
    r.y_end = cur.end == 0 ? hi : lo;
    r.winding = winding;
    path.runs.push_back(r);
    StrandGraph::End out{cur.piece, 1 - cur.end};
    auto arc = g.boundary_arc(out);
    if (arc && (*arc == Arc::mark_a || *arc == Arc::mark_b)) {
      if (closed) fail(ErrorKind::corrupt, "loop reaches a marked edge");
      *terminal = arc;
      path.total_winding = winding;
      return path;
    }
    auto [next, turn] = g.partner(out);
    winding += turn;
    cur = next;
  }
  fail(ErrorKind::corrupt, "trace does not terminate");
}

}  // namespace

LoopDecomposition trace_all(const Configuration& c, const DobrushinDomain& d) {
  StrandGraph g(c, d);
  std::vector<char> visited(static_cast<std::size_t>(g.n_pieces()), 0);
  LoopDecomposition out;
  if (d.has_marks()) {
    const Mark& a = d.a();
    StrandGraph::End start = a.at_top ? StrandGraph::End{g.last_piece(a.q), 1} : StrandGraph::End{g.first_piece(a.q), 0};
    std::optional<Arc> term;
    out.interface = walk(g, start, visited, false, &term);
    if (!term || *term != Arc::mark_b) fail(ErrorKind::corrupt, "interface does not end at b");
  }
  for (int p = 0; p < g.n_pieces(); ++p) {
    if (visited[static_cast<std::size_t>(p)]) continue;
    // loops inherit the column orientation: down on 1 mod 4, up on 3 mod 4
    int entry = mod4(g.column_q(p)) == 1 ? 1 : 0;
    InterfacePath loop = walk(g, {p, entry}, visited, true, nullptr);
    if (std::abs(loop.total_winding) != 4) fail(ErrorKind::corrupt, "loop winding is not +-2pi");
    out.loops.push_back(std::move(loop));
  }
  return out;
}

InterfacePath trace_interface(const Configuration& c, const DobrushinDomain& d) {
  require(d.has_marks(), "interface needs Dobrushin boundary conditions");
  return *trace_all(c, d).interface;
}

int count_loops(const Configuration& c, const DobrushinDomain& d) {
  return static_cast<int>(trace_all(c, d).loops.size());
}

void write_configuration(std::ostream& os, const Configuration& c, const DobrushinDomain& d) {
  std::vector<std::tuple<char, int, double>> rows;
  for (int q = d.q_min(); q <= d.q_max(); q += 2)
    for (double y : c.events(q)) rows.emplace_back(mod4(q) == 0 ? 'D' : 'B', q, y);
  std::sort(rows.begin(), rows.end());
  char buf[64];
  for (auto& [k, q, y] : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", y);
    os << k << ' ' << q << ' ' << buf << '\n';
  }
}

Configuration read_configuration(std::istream& is, const DobrushinDomain& d) {
  std::vector<std::pair<int, double>> deaths, bridges;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    char k;
    int q;
    std::string ys;
    require(static_cast<bool>(ls >> k >> q >> ys), "malformed configuration line: " + line);
    double y = std::stod(ys);
    require(k == 'D' || k == 'B', "configuration lines start with D or B");
    (k == 'D' ? deaths : bridges).emplace_back(q, y);
  }
  return Configuration::from_points(d, deaths, bridges);
}

std::string render_svg(const Configuration& c, const DobrushinDomain& d, const LoopDecomposition& loops) {
  const double delta = d.delta();
  double x0 = d.q_min() * delta / 4, x1 = d.q_max() * delta / 4;
  double y0 = 1e300, y1 = -1e300;
  for (const auto& e : d.boundary()) {
    y0 = std::min({y0, e.from.y, e.to.y});
    y1 = std::max({y1, e.from.y, e.to.y});
  }
  const double scale = 400.0 / std::max(x1 - x0, y1 - y0);
  const double pad = 20;
  auto X = [&](double x) { return pad + (x - x0) * scale; };
  auto Y = [&](double y) { return pad + (y1 - y) * scale; };
  char buf[256];
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << static_cast<int>(2 * pad + (x1 - x0) * scale)
    << "\" height=\"" << static_cast<int>(2 * pad + (y1 - y0) * scale) << "\">\n";
  s << "<style>.wired{stroke:#000;stroke-width:3}.free{stroke:#888;stroke-width:3;stroke-dasharray:4 3}"
       ".mark{stroke:#c00;stroke-width:4}.primal{stroke:#bbb;stroke-width:1}.dual{stroke:#ddd;stroke-width:1;"
       "stroke-dasharray:2 2}.death{stroke:#d22;stroke-width:1.5}.bridge{stroke:#22d;stroke-width:1.5}"
       ".loop{fill:none;stroke:#e33;stroke-width:1}.interface{fill:none;stroke:#f90;stroke-width:2}</style>\n";
  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    Interval iv = d.medial(q)->interior;
    if (iv.empty()) continue;
    double x = q * delta / 4;
    std::snprintf(buf, sizeof buf, "<line class=\"%s\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\"/>\n",
                  mod4(q) == 0 ? "primal" : "dual", X(x), Y(iv.lo), X(x), Y(iv.hi));
    s << buf;
  }
  for (const auto& e : d.boundary()) {
    const char* cls = e.arc == Arc::wired ? "wired" : e.arc == Arc::free ? "free" : "mark";
    std::snprintf(buf, sizeof buf, "<line class=\"%s\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\"/>\n", cls,
                  X(e.from.q * delta / 4), Y(e.from.y), X(e.to.q * delta / 4), Y(e.to.y));
    s << buf;
  }
  const double r = 3;
  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    double x = q * delta / 4;
    for (double y : c.events(q)) {
      if (mod4(q) == 0) {
        std::snprintf(buf, sizeof buf,
                      "<path class=\"death\" d=\"M%.3f %.3fL%.3f %.3fM%.3f %.3fL%.3f %.3f\"/>\n", X(x) - r,
                      Y(y) - r, X(x) + r, Y(y) + r, X(x) - r, Y(y) + r, X(x) + r, Y(y) - r);
      } else {
        std::snprintf(buf, sizeof buf, "<line class=\"bridge\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\"/>\n",
                      X(x - delta / 2), Y(y), X(x + delta / 2), Y(y));
      }
      s << buf;
    }
  }
  auto poly = [&](const InterfacePath& p, const char* cls, bool close) {
    s << "<path class=\"" << cls << "\" d=\"";
    for (std::size_t i = 0; i < p.runs.size(); ++i) {
      const Run& run = p.runs[i];
      double x = run.q * delta / 4;
      std::snprintf(buf, sizeof buf, "%s%.3f %.3fL%.3f %.3f", i == 0 ? "M" : "L", X(x), Y(run.y_start), X(x),
                    Y(run.y_end));
      s << buf;
    }
    if (close) s << "Z";
    s << "\"/>\n";
  };
  for (const auto& l : loops.loops) poly(l, "loop", true);
  if (loops.interface) poly(*loops.interface, "interface", false);
  s << "</svg>\n";
  return s.str();
}

}  // namespace sdqi
