#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sdqi/lattice.hpp"

namespace sdqi {

// Death points on primal columns and bridges on dual columns, as sorted heights.
// Storage is one vector per medial column slot (q - q_min)/2 of the host domain.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(const DobrushinDomain& d);

  // validated construction from explicit point lists
  static Configuration from_points(const DobrushinDomain& d, const std::vector<std::pair<int, double>>& deaths,
                                   const std::vector<std::pair<int, double>>& bridges);

  const std::vector<double>& events(int q) const { return ev_[slot(q)]; }
  std::vector<double>& events(int q) { return ev_[slot(q)]; }
  bool has_column(int q) const { return q >= q_min_ && (q - q_min_) / 2 < static_cast<int>(ev_.size()); }
  int q_min() const { return q_min_; }
  int q_max() const { return q_min_ + 2 * (static_cast<int>(ev_.size()) - 1); }

  std::size_t n_deaths() const;
  std::size_t n_bridges() const;
  std::size_t size() const { return n_deaths() + n_bridges(); }

  // insert keeps the column sorted; erase removes the i-th point of a column
  void insert(int q, double y);
  void erase(int q, std::size_t i);

  // throws if points sit outside column interiors, are unsorted or tie with a neighbour column
  void validate(const DobrushinDomain& d) const;

  bool operator==(const Configuration& o) const { return q_min_ == o.q_min_ && ev_ == o.ev_; }

 private:
  std::size_t slot(int q) const { return static_cast<std::size_t>((q - q_min_) / 2); }
  int q_min_ = 0;
  std::vector<std::vector<double>> ev_;
};

Configuration sample_ppp(const DobrushinDomain& d, double lambda, double mu, Rng& rng);

enum class ClusterSide { primal, dual };
enum class Bc { free, wired_on_arc };

// Union-find structure over the segments of one side, rebuilt per configuration.
class ClusterMap {
 public:
  ClusterMap(const Configuration& c, const DobrushinDomain& d, ClusterSide side, Bc bc);
  int count() const { return count_; }
  // segment id of a point on a column of this side; -1 if it is not in the domain
  int locate(int q, double y) const;
  int find(int id) const;
  int arc_node() const { return arc_node_; }

 private:
  std::vector<int> col_offset_;  // by medial slot
  int q_min_ = 0;
  int arc_node_ = -1;
  int count_ = 0;
  mutable std::vector<int> parent_;
  const Configuration* config_ = nullptr;
  const DobrushinDomain* domain_ = nullptr;
  Bc bc_ = Bc::free;
  int unite(int a, int b);
};

int count_clusters(const Configuration& c, const DobrushinDomain& d, ClusterSide side, Bc bc);

bool connected(const Configuration& c, const DobrushinDomain& d, LatticePoint x, LatticePoint y,
               Bc bc = Bc::free);

enum class VDir { up, down };

struct Run {
  int q = 0;
  double y_start = 0, y_end = 0;
  VDir dir = VDir::up;
  int winding = 0;  // cumulative winding from the start of the path, units of pi/2
};

struct InterfacePath {
  std::vector<Run> runs;
  int total_winding = 0;  // units of pi/2
  double total_winding_rad() const { return total_winding * kPi / 2; }
  // winding from a point on run i to the end b, units of pi/2
  int winding_to_end(std::size_t i) const { return total_winding - runs[i].winding; }
};

struct LoopDecomposition {
  std::optional<InterfacePath> interface;  // present on domains with marks
  std::vector<InterfacePath> loops;
};

LoopDecomposition trace_all(const Configuration& c, const DobrushinDomain& d);
InterfacePath trace_interface(const Configuration& c, const DobrushinDomain& d);
int count_loops(const Configuration& c, const DobrushinDomain& d);

// "D|B <q> <height>" per line, heights at 17 significant digits
void write_configuration(std::ostream& os, const Configuration& c, const DobrushinDomain& d);
Configuration read_configuration(std::istream& is, const DobrushinDomain& d);

std::string render_svg(const Configuration& c, const DobrushinDomain& d, const LoopDecomposition& loops);

}  // namespace sdqi
