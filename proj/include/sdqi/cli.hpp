#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "sdqi/fkqi.hpp"

namespace sdqi {

inline constexpr const char* kVersion = "0.1.0";

// Domain file:
//
//   [domain]
//   polygon = 0 0; 2 0; 2 1; 0 1     (or: rectangle = x0 y0 x1 y1)
//   delta = 0.1
//   [marks]                          (optional; without it the boundary is free)
//   a = 0 0.5
//   b = 2 0.5
//   [model]                          (optional)
//   form = fk                        (fk or loop)
//   lambda = 0.5
//   mu = 1
//   [run]                            (optional defaults for command-line flags)
//   seed = 7
struct DomainSpec {
  Polygon polygon;
  std::optional<PlanePoint> a, b;
  double delta = 1.0;
  std::map<std::string, std::string> model, run;
  std::string text;  // file contents, part of the config hash

  bool marked() const { return a.has_value(); }
  DobrushinDomain build(double delta) const;
  DobrushinDomain build() const { return build(delta); }
  // critical parameters at this mesh unless overridden in [model]
  ModelParams params(double delta) const;
};

DomainSpec parse_domain(std::istream& is);
DomainSpec load_domain(const std::string& path);

// Boundary data for the Dirichlet subcommand:
//   [bc]
//   type = polynomial        c<i><j> is the coefficient of x^i y^j, e.g. c20 = 1, c02 = -1
//   type = arcs              wired = 1, free = 0 (needs marks)
struct BoundaryData {
  std::string type = "polynomial";
  std::map<std::pair<int, int>, double> coef;
  double wired = 1, free = 0;
};
BoundaryData load_boundary_data(const std::string& path);

// Runs one subcommand. Exit codes: 0 success, 1 usage error, 2 validation failure.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sdqi
