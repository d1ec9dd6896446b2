#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sdqi/fkqi.hpp"
#include "sdqi/sdca.hpp"

namespace sdqi {

// Aligned y-nodes shared by every mid-edge column: a uniform grid of step h_y
// plus all column end heights. Column q uses the nodes inside its closed span.
struct MidedgeGrid {
  double delta = 1.0;
  double h_y = 0.25;
  std::vector<double> y;
  std::vector<int> q;                // mid-edge columns, increasing
  std::vector<std::size_t> k0, k1;   // first and last node of each column
  int q_min = 0;

  // column slot of q, or -1
  int slot(int q) const;
  // node index of height y, or -1
  int node(double y) const;
  bool has(int q, std::size_t k) const;
  std::size_t size() const;  // number of (column, node) pairs
};

MidedgeGrid make_midedge_grid(const DobrushinDomain& d, double h_y);

// F(b) = tau(b)/sqrt(delta). This is nu/sqrt(delta) when b sits on a nu column;
// otherwise the observable carries an extra global factor i so that parallelism holds.
cplx normalization_phase(const DobrushinDomain& d);

// Complex values of F on a mid-edge grid; sigmas are empty for deterministic fields.
struct MidedgeField {
  MidedgeGrid grid;
  std::vector<std::vector<cplx>> F;  // per column, node k at index k - k0
  std::vector<std::vector<double>> sigma_re, sigma_im;

  bool has_sigma() const { return !sigma_re.empty(); }
  // value at (q, node k); zero outside the domain
  cplx at(int q, std::size_t k) const;
  cplx& ref(int q, std::size_t k);
  double sig_re(int q, std::size_t k) const;
  double sig_im(int q, std::size_t k) const;
};

MidedgeField zero_field(const MidedgeGrid& g);

// Monte Carlo tallies. Each batch is an independent chain (or block of
// importance samples), so batch-to-batch spread gives the error bars.
struct ObservableField {
  MidedgeGrid grid;
  cplx phase;  // normalization_phase(d) / sqrt(delta)
  int batches = 0;
  long n_samples = 0;
  std::vector<std::vector<cplx>> batch_sum;   // [batch][point]: sum of w exp(iW/2)
  std::vector<double> batch_weight;           // [batch]: sum of w
  std::vector<long> hits;                     // [point]
  double max_parallel_defect = 0;             // over all hits, relative

  std::size_t point(int q, std::size_t k) const;  // flat index; grid.has(q, k) required
  cplx estimate(std::size_t i) const;
  MidedgeField field() const;
};

struct ObservableOptions {
  Sampler sampler = Sampler::mcmc;
  WeightForm form = WeightForm::loop_sqrt2l;
  int batches = 32;
  int threads = 0;  // 0: hardware concurrency
  McmcOptions mcmc;
};

// Samples interfaces of the critical model on d and tallies exp(iW(e,b)/2)
// at every grid point the interface passes. Deterministic given the seed:
// batch j always uses stream j.
ObservableField estimate_observable(const DobrushinDomain& d, const MidedgeGrid& grid, long n_samples,
                                    std::uint64_t seed, ObservableOptions opt = {});

// Adds one interface to batch b with weight w.
void tally_interface(ObservableField& f, const DobrushinDomain& d, const InterfacePath& path, int b, double w);

// Medial observable g(p) = F(p-) + F(p+) at medial column q, node k; absent
// neighbours count as zero.
struct MedialValue {
  cplx g;
  double sigma_re = 0, sigma_im = 0;
};
MedialValue medial_observable(const MidedgeField& f, int q, std::size_t k);

// Proj[X, tau] = (X + (tau / conj tau) conj X) / 2
cplx project(cplx x, cplx tau);

struct ResidualPoint {
  int q = 0;
  double y = 0;
  double residual = 0;  // |dbar F|
  double sigma = 0;     // propagated Monte Carlo sigma of |dbar F|
};

struct ResidualMap {
  std::vector<ResidualPoint> points;
  double band_c = 0;           // C in the 3 sigma + C h_y^2 band
  double fraction_in_band = 0;
  double max_residual = 0;
};

// dbar F(m) = ((F(e) - F(w))/delta - d_y F(m)/i) / 2 with a central difference
// in y, at interior mid-edge nodes whose vertical neighbours are h_y away.
// For a plain field sigma treats the five values as independent; for Monte
// Carlo tallies it is the batch-to-batch spread of the residual itself, which
// keeps the strong correlation between neighbouring points.
ResidualMap sholomorphic_residual(const MidedgeField& f, const DobrushinDomain& d, double band_c = 1.0);
ResidualMap sholomorphic_residual(const ObservableField& f, const DobrushinDomain& d, double band_c = 1.0);

// H on every medial column (interior and wall points) at the grid nodes.
struct PrimitiveField {
  MidedgeGrid grid;
  int q_min = 0, q_max = 0;       // medial columns, step 2
  std::vector<std::vector<double>> H;  // [medial slot][node], NaN where absent
  LatticePoint base;              // b^w, where H = 0
  double closure = 0;             // worst mismatch of any increment after path integration
  double rectangle_closure = 0;   // worst sum around an elementary rectangle

  bool has(int q, std::size_t k) const;
  double at(int q, std::size_t k) const;
};

// Path-integrates H from b^w: vertical steps use 2 Im(F(e-) conj F(e+)) on
// primal columns and its negative on dual ones, each factor averaged over the
// step; horizontal steps use H(primal) - H(dual) = delta |F|^2.
PrimitiveField accumulate_H(const MidedgeField& f, const DobrushinDomain& d);

struct HReport {
  double wired_dev = 0;         // max |H - 1| over primal points of the wired arc
  double free_dev = 0;          // max |H| over dual points of the free arc
  double min_primal_laplacian = 0;
  double max_dual_laplacian = 0;
  double neighbors_defect = 0;  // max |H(p+) - H(p-) - Im(g(p)^2 delta)|
  double closure = 0;
  double rectangle_closure = 0;
  double sandwich_primal = 0;   // max (H - h_primal) over primal interior points, should be <= 0
  double sandwich_dual = 0;     // max (h_dual - H) over dual interior points, should be <= 0
  std::size_t n_wired = 0, n_free = 0;
};

// Boundary constancy, signs of the semi-discrete Laplacian (extended across the
// boundary by H(u_ext) = H(w)), the neighbour identity and the comparison with
// the semi-discrete harmonic functions with data 1 on wired and 0 on free.
HReport h_diagnostics(const PrimitiveField& H, const MidedgeField& f, const DobrushinDomain& d);

void write_observable_csv(std::ostream& os, const ObservableField& f);
void write_H_csv(std::ostream& os, const PrimitiveField& H);

}  // namespace sdqi
