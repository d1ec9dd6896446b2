#pragma once

#include <functional>
#include <vector>

#include "sdqi/percolation.hpp"

namespace sdqi {

enum class WeightForm { fk_2k, loop_sqrt2l };

struct ModelParams {
  double delta = 1.0;
  double lambda = 0.5;  // death intensity on primal columns (rho in the loop form)
  double mu = 1.0;      // bridge intensity on dual columns (rho in the loop form)
  double q_weight = 2.0;
  WeightForm form = WeightForm::fk_2k;
  Bc bc = Bc::free;  // wired_on_arc for Dobrushin boundary conditions

  bool critical() const;
  void validate() const;
};

// rho = 1/(sqrt2 delta). FK form: lambda = 1/(2 delta), mu = 1/delta. Loop form: rho on both.
ModelParams critical_params(double delta, WeightForm form = WeightForm::fk_2k, Bc bc = Bc::free);

// cluster counts used by the weights
int weight_clusters(const Configuration& c, const DobrushinDomain& d, Bc bc);  // k
// k*: dual clusters, those touching the free arc (or the whole free boundary) merged
int weight_dual_clusters(const Configuration& c, const DobrushinDomain& d);
int weight_loops(const Configuration& c, const DobrushinDomain& d);  // l, the interface excluded

// log of the density with respect to Lebesgue measure on point sets:
// sum of log intensities plus the log weight q^k or sqrt(q)^l
double log_density(const Configuration& c, const DobrushinDomain& d, const ModelParams& p);

// Only the count entering the weight is kept current unless track_all is set;
// the others are then -1.
struct ChainState {
  Configuration config;
  bool track_all = false;
  int cached_k = 0;
  int cached_kstar = 0;
  int cached_l = 0;
  long step_count = 0;
  long accepted = 0;
};

ChainState make_chain(const DobrushinDomain& d, const ModelParams& p, Configuration start, bool track_all = false);
// throws corrupt if the caches disagree with a recount
void verify_caches(const ChainState& s, const DobrushinDomain& d, const ModelParams& p);

// total birth mass: lambda * (primal interior length) + mu * (dual interior length)
double birth_mass(const DobrushinDomain& d, const ModelParams& p);

// Metropolis-Hastings acceptance of adding (q, y), and of removing point i of column q
double birth_acceptance(const ChainState& s, const DobrushinDomain& d, const ModelParams& p, int q, double y);
double death_acceptance(const ChainState& s, const DobrushinDomain& d, const ModelParams& p, int q, std::size_t i);

// one birth-or-death proposal; returns true if accepted
bool mcmc_step(ChainState& s, const DobrushinDomain& d, const ModelParams& p, Rng& rng);

struct Estimate {
  double value = 0;
  double sigma = 0;
  double ess = 0;  // effective sample size
  long n = 0;
};

using Functional = std::function<double(const Configuration&)>;

struct McmcOptions {
  long burn_in = -1;  // steps; default 10 x expected point count
  long thin = -1;     // steps between samples; default the expected point count
  int batches = 32;
};

// Runs one chain from the empty configuration and returns batch-means estimates
// for every functional.
std::vector<Estimate> mcmc_estimate(const DobrushinDomain& d, const ModelParams& p,
                                    const std::vector<Functional>& fs, long n_samples, Rng& rng,
                                    McmcOptions opt = {});

// Self-normalized importance sampling from the Poisson process with weight q^k
// (or sqrt(q)^l); the standard error uses the delta method.
std::vector<Estimate> importance_estimate(const DobrushinDomain& d, const ModelParams& p,
                                          const std::vector<Functional>& fs, long n_samples, Rng& rng);

enum class Direction { horizontal, vertical };
enum class Sampler { mcmc, importance };

// 1 if a primal cluster joins the left and right (or bottom and top) sides of a
// free rectangle built by build_free_rectangle
bool has_crossing(const Configuration& c, const DobrushinDomain& d, Direction dir);

// N: measure of pairs of border points joined by a primal cluster. Horizontal
// uses a midpoint y-grid of m points on the outer primal columns; vertical uses
// the bottom and top ends of the primal columns.
double pair_connectivity(const Configuration& c, const DobrushinDomain& d, Direction dir, int m);

struct CrossingReport {
  double p_hat = 0, sigma = 0;
  double e_n = 0, e_n2 = 0;
  double cs_bound = 0;  // E[N]^2 / E[N^2]
  double cs_sigma = 0;
  long n_samples = 0;
};

Estimate crossing_probability(const DobrushinDomain& d, Direction dir, const ModelParams& p, Sampler s, long n,
                              Rng& rng);
CrossingReport second_moment_report(const DobrushinDomain& d, Direction dir, const ModelParams& p, Sampler s,
                                    long n, Rng& rng, int grid_points = 16);

// R_{n, alpha} at mesh delta: primal columns x = -n..n, height 2 alpha n
DobrushinDomain rsw_rectangle(int n, double alpha, double delta = 1.0);

}  // namespace sdqi
