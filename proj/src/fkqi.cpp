#include "sdqi/fkqi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdqi {

bool ModelParams::critical() const {
  if (form == WeightForm::loop_sqrt2l) return std::abs(lambda - mu) <= 1e-12 * std::max(lambda, mu);
  return std::abs(mu - q_weight * lambda) <= 1e-12 * mu;
}

void ModelParams::validate() const {
  require(delta > 0, "mesh must be positive");
  require(lambda >= 0 && mu >= 0, "intensities must be non-negative");
  require(q_weight > 0, "cluster weight must be positive");
  if (form == WeightForm::loop_sqrt2l)
    require(lambda == mu, "the loop form uses one intensity rho on both families");
}

ModelParams critical_params(double delta, WeightForm form, Bc bc) {
  require(delta > 0, "mesh must be positive");
  ModelParams p;
  p.delta = delta;
  p.form = form;
  p.bc = bc;
  const double rho = 1 / (std::sqrt(2.0) * delta);
  if (form == WeightForm::loop_sqrt2l) {
    p.lambda = p.mu = rho;
  } else {
    p.lambda = 1 / (2 * delta);
    p.mu = 1 / delta;
  }
  return p;
}

int weight_clusters(const Configuration& c, const DobrushinDomain& d, Bc bc) {
  return count_clusters(c, d, ClusterSide::primal, bc);
}

int weight_dual_clusters(const Configuration& c, const DobrushinDomain& d) {
  return count_clusters(c, d, ClusterSide::dual, Bc::wired_on_arc);
}

int weight_loops(const Configuration& c, const DobrushinDomain& d) { return count_loops(c, d); }

namespace {

double rate(int q, const ModelParams& p) { return mod4(q) == 0 ? p.lambda : p.mu; }

// columns carrying points, with cumulative birth mass
struct BirthTable {
  std::vector<int> q;
  std::vector<double> cum;
  double total = 0;
};

BirthTable birth_table(const DobrushinDomain& d, const ModelParams& p) {
  BirthTable t;
  for (int q = d.q_min(); q <= d.q_max(); q += 2) {
    Interval iv = d.medial(q)->interior;
    double m = rate(q, p) * iv.length();
    if (m <= 0) continue;
    t.total += m;
    t.q.push_back(q);
    t.cum.push_back(t.total);
  }
  return t;
}

int weight_count(const Configuration& c, const DobrushinDomain& d, const ModelParams& p) {
  return p.form == WeightForm::fk_2k ? weight_clusters(c, d, p.bc) : weight_loops(c, d);
}

double log_weight_of(int count, const ModelParams& p) {
  return count * (p.form == WeightForm::fk_2k ? 1.0 : 0.5) * std::log(p.q_weight);
}

void recount(ChainState& s, const DobrushinDomain& d, const ModelParams& p) {
  const bool fk = p.form == WeightForm::fk_2k;
  s.cached_k = s.track_all || fk ? weight_clusters(s.config, d, p.bc) : -1;
  s.cached_kstar = s.track_all ? weight_dual_clusters(s.config, d) : -1;
  s.cached_l = s.track_all || !fk ? weight_loops(s.config, d) : -1;
}

// after an accepted move whose weight count is already known
void update(ChainState& s, const DobrushinDomain& d, const ModelParams& p, int count) {
  if (s.track_all) {
    recount(s, d, p);
    return;
  }
  (p.form == WeightForm::fk_2k ? s.cached_k : s.cached_l) = count;
}

double cached_log_weight(const ChainState& s, const ModelParams& p) {
  return log_weight_of(p.form == WeightForm::fk_2k ? s.cached_k : s.cached_l, p);
}

double log_weight(const Configuration& c, const DobrushinDomain& d, const ModelParams& p) {
  return log_weight_of(weight_count(c, d, p), p);
}

double accept(double log_ratio) { return log_ratio >= 0 ? 1.0 : std::exp(log_ratio); }

}  // namespace

double log_density(const Configuration& c, const DobrushinDomain& d, const ModelParams& p) {
  double s = log_weight(c, d, p);
  for (int q = d.q_min(); q <= d.q_max(); q += 2) s += static_cast<double>(c.events(q).size()) * std::log(rate(q, p));
  return s;
}

ChainState make_chain(const DobrushinDomain& d, const ModelParams& p, Configuration start, bool track_all) {
  p.validate();
  start.validate(d);
  ChainState s;
  s.track_all = track_all;
  s.config = std::move(start);
  recount(s, d, p);
  return s;
}

void verify_caches(const ChainState& s, const DobrushinDomain& d, const ModelParams& p) {
  ChainState t = s;
  recount(t, d, p);
  // untracked counts stay -1 in both
  if (t.cached_k != s.cached_k || t.cached_kstar != s.cached_kstar || t.cached_l != s.cached_l)
    fail(ErrorKind::corrupt, "chain caches disagree with a recount");
}

double birth_mass(const DobrushinDomain& d, const ModelParams& p) { return birth_table(d, p).total; }

double birth_acceptance(const ChainState& s, const DobrushinDomain& d, const ModelParams& p, int q, double y) {
  Configuration c = s.config;
  c.insert(q, y);
  double n1 = static_cast<double>(c.size());
  double lr = log_weight(c, d, p) - cached_log_weight(s, p) + std::log(birth_mass(d, p) / n1);
  return accept(lr);
}

double death_acceptance(const ChainState& s, const DobrushinDomain& d, const ModelParams& p, int q, std::size_t i) {
  Configuration c = s.config;
  c.erase(q, i);
  double n = static_cast<double>(s.config.size());
  double lr = log_weight(c, d, p) - cached_log_weight(s, p) + std::log(n / birth_mass(d, p));
  return accept(lr);
}

bool mcmc_step(ChainState& s, const DobrushinDomain& d, const ModelParams& p, Rng& rng) {
  const BirthTable table = birth_table(d, p);
  ++s.step_count;
  const std::size_t n = s.config.size();
  Configuration& c = s.config;
  if (rng.uniform() < 0.5) {
    if (table.total <= 0) return false;
    double u = rng.uniform() * table.total;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(table.cum.begin(), table.cum.end(), u) - table.cum.begin());
    k = std::min(k, table.q.size() - 1);
    int q = table.q[k];
    Interval iv = d.medial(q)->interior;
    double y = iv.lo + iv.length() * rng.uniform();
    c.insert(q, y);
    int count = weight_count(c, d, p);
    double lr = log_weight_of(count, p) - cached_log_weight(s, p) + std::log(table.total / static_cast<double>(n + 1));
    if (rng.uniform() < accept(lr)) {
      update(s, d, p, count);
      ++s.accepted;
      return true;
    }
    auto& v = c.events(q);
    c.erase(q, static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), y) - v.begin()));
    return false;
  }
  if (n == 0) return false;
  // uniform existing point
  std::size_t r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
  r = std::min(r, n - 1);
  int q = c.q_min();
  for (; q <= c.q_max(); q += 2) {
    std::size_t m = c.events(q).size();
    if (r < m) break;
    r -= m;
  }
  double y = c.events(q)[r];
  c.erase(q, r);
  int count = weight_count(c, d, p);
  double lr = log_weight_of(count, p) - cached_log_weight(s, p) + std::log(static_cast<double>(n) / table.total);
  if (rng.uniform() < accept(lr)) {
    update(s, d, p, count);
    ++s.accepted;
    return true;
  }
  c.insert(q, y);
  return false;
}

namespace {

Estimate batch_means(const std::vector<double>& xs, int batches) {
  Estimate e;
  e.n = static_cast<long>(xs.size());
  if (xs.empty()) return e;
  e.value = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += sq(x - e.value);
  var /= static_cast<double>(xs.size());
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), xs.size());
  const std::size_t len = xs.size() / b;
  if (b < 2 || len == 0) {
    e.sigma = std::sqrt(var / static_cast<double>(xs.size()));
    e.ess = static_cast<double>(xs.size());
    return e;
  }
  std::vector<double> means(b);
  for (std::size_t i = 0; i < b; ++i)
    means[i] = std::accumulate(xs.begin() + static_cast<long>(i * len), xs.begin() + static_cast<long>((i + 1) * len), 0.0) /
               static_cast<double>(len);
  double mm = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b), bv = 0;
  for (double m : means) bv += sq(m - mm);
  bv /= static_cast<double>(b - 1);
  // never report less spread than independent sampling would
  e.sigma = std::sqrt(std::max(bv / static_cast<double>(b), var / static_cast<double>(xs.size())));
  e.ess = e.sigma > 0 ? var / sq(e.sigma) : static_cast<double>(xs.size());
  return e;
}

}  // namespace

std::vector<Estimate> mcmc_estimate(const DobrushinDomain& d, const ModelParams& p,
                                    const std::vector<Functional>& fs, long n_samples, Rng& rng, McmcOptions opt) {
  require(n_samples > 0, "no samples", ErrorKind::no_samples);
  const double expected = std::max(1.0, birth_mass(d, p));
  const long burn = opt.burn_in >= 0 ? opt.burn_in : static_cast<long>(std::ceil(10 * expected));
  const long thin = opt.thin > 0 ? opt.thin : std::max(1L, static_cast<long>(std::ceil(expected)));
  ChainState s = make_chain(d, p, Configuration(d));
  for (long i = 0; i < burn; ++i) mcmc_step(s, d, p, rng);
  std::vector<std::vector<double>> vals(fs.size(), std::vector<double>(static_cast<std::size_t>(n_samples)));
  for (long k = 0; k < n_samples; ++k) {
    for (long i = 0; i < thin; ++i) mcmc_step(s, d, p, rng);
    for (std::size_t f = 0; f < fs.size(); ++f) vals[f][static_cast<std::size_t>(k)] = fs[f](s.config);
  }
  std::vector<Estimate> out;
  for (const auto& v : vals) out.push_back(batch_means(v, opt.batches));
  return out;
}

std::vector<Estimate> importance_estimate(const DobrushinDomain& d, const ModelParams& p,
                                          const std::vector<Functional>& fs, long n_samples, Rng& rng) {
  require(n_samples > 0, "no samples", ErrorKind::no_samples);
  p.validate();
  std::vector<double> lw(static_cast<std::size_t>(n_samples));
  std::vector<std::vector<double>> vals(fs.size(), std::vector<double>(lw.size()));
  for (std::size_t i = 0; i < lw.size(); ++i) {
    Configuration c = sample_ppp(d, p.lambda, p.mu, rng);
    lw[i] = log_weight(c, d, p);
    for (std::size_t f = 0; f < fs.size(); ++f) vals[f][i] = fs[f](c);
  }
  const double top = *std::max_element(lw.begin(), lw.end());
  double sw = 0, sw2 = 0;
  std::vector<double> w(lw.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(lw[i] - top);
    sw += w[i];
    sw2 += w[i] * w[i];
  }
  const double ess = sw * sw / sw2;
  if (!(ess >= 10)) fail(ErrorKind::degenerate, "effective sample size < 10");
  std::vector<Estimate> out;
  for (const auto& v : vals) {
    Estimate e;
    e.n = n_samples;
    e.ess = ess;
    for (std::size_t i = 0; i < w.size(); ++i) e.value += w[i] * v[i];
    e.value /= sw;
    double s2 = 0;
    for (std::size_t i = 0; i < w.size(); ++i) s2 += sq(w[i] * (v[i] - e.value));
    e.sigma = std::sqrt(s2) / sw;
    out.push_back(e);
  }
  return out;
}

namespace {

std::vector<int> primal_columns(const DobrushinDomain& d) {
  std::vector<int> cols = d.interior_columns(Role::primal);
  std::sort(cols.begin(), cols.end());
  require(cols.size() >= 2, "crossing needs at least two primal columns");
  return cols;
}

// midpoints of the first and last segments of a column
double first_segment(const Configuration& c, const DobrushinDomain& d, int q) {
  Interval iv = d.medial(q)->interior;
  const auto& v = c.events(q);
  return 0.5 * (iv.lo + (v.empty() ? iv.hi : v.front()));
}

double last_segment(const Configuration& c, const DobrushinDomain& d, int q) {
  Interval iv = d.medial(q)->interior;
  const auto& v = c.events(q);
  return 0.5 * ((v.empty() ? iv.lo : v.back()) + iv.hi);
}

void require_rectangle(const DobrushinDomain& d) {
  require(!d.has_marks(), "crossings are measured on free rectangles");
  auto cols = primal_columns(d);
  Interval ref = d.medial(cols.front())->interior;
  for (int q : cols) {
    Interval iv = d.medial(q)->interior;
    require(iv.lo == ref.lo && iv.hi == ref.hi, "crossing domain is not a rectangle");
  }
  for (std::size_t i = 1; i < cols.size(); ++i) require(cols[i] - cols[i - 1] == 4, "crossing domain is not a rectangle");
}

}  // namespace

bool has_crossing(const Configuration& c, const DobrushinDomain& d, Direction dir) {
  auto cols = primal_columns(d);
  ClusterMap cm(c, d, ClusterSide::primal, Bc::free);
  std::vector<int> from, to;
  if (dir == Direction::horizontal) {
    int ql = cols.front(), qr = cols.back();
    Interval iv = d.medial(ql)->interior;
    std::vector<double> cut = {iv.lo};
    cut.insert(cut.end(), c.events(ql).begin(), c.events(ql).end());
    cut.push_back(iv.hi);
    for (std::size_t i = 0; i + 1 < cut.size(); ++i) from.push_back(cm.find(cm.locate(ql, 0.5 * (cut[i] + cut[i + 1]))));
    Interval jv = d.medial(qr)->interior;
    cut = {jv.lo};
    cut.insert(cut.end(), c.events(qr).begin(), c.events(qr).end());
    cut.push_back(jv.hi);
    for (std::size_t i = 0; i + 1 < cut.size(); ++i) to.push_back(cm.find(cm.locate(qr, 0.5 * (cut[i] + cut[i + 1]))));
  } else {
    for (int q : cols) {
      from.push_back(cm.find(cm.locate(q, first_segment(c, d, q))));
      to.push_back(cm.find(cm.locate(q, last_segment(c, d, q))));
    }
  }
  std::sort(from.begin(), from.end());
  for (int r : to)
    if (std::binary_search(from.begin(), from.end(), r)) return true;
  return false;
}

double pair_connectivity(const Configuration& c, const DobrushinDomain& d, Direction dir, int m) {
  auto cols = primal_columns(d);
  ClusterMap cm(c, d, ClusterSide::primal, Bc::free);
  std::vector<int> from, to;
  double w = 0;
  if (dir == Direction::horizontal) {
    require(m >= 8, "grid too coarse: need at least 8 points per border");
    Interval iv = d.medial(cols.front())->interior;
    w = iv.length() / m;
    for (int i = 0; i < m; ++i) {
      double y = iv.lo + (i + 0.5) * w;
      from.push_back(cm.find(cm.locate(cols.front(), y)));
      to.push_back(cm.find(cm.locate(cols.back(), y)));
    }
  } else {
    require(cols.size() >= 8, "grid too coarse: need at least 8 points per border");
    w = d.delta();
    for (int q : cols) {
      from.push_back(cm.find(cm.locate(q, first_segment(c, d, q))));
      to.push_back(cm.find(cm.locate(q, last_segment(c, d, q))));
    }
  }
  std::sort(from.begin(), from.end());
  long pairs = 0;
  for (int r : to) {
    auto [lo, hi] = std::equal_range(from.begin(), from.end(), r);
    pairs += hi - lo;
  }
  return static_cast<double>(pairs) * w * w;
}

namespace {

std::vector<Estimate> run(const DobrushinDomain& d, const ModelParams& p, Sampler s,
                          const std::vector<Functional>& fs, long n, Rng& rng) {
  if (s == Sampler::importance) return importance_estimate(d, p, fs, n, rng);
  return mcmc_estimate(d, p, fs, n, rng);
}

}  // namespace

Estimate crossing_probability(const DobrushinDomain& d, Direction dir, const ModelParams& p, Sampler s, long n,
                              Rng& rng) {
  require_rectangle(d);
  Functional f = [&](const Configuration& c) { return has_crossing(c, d, dir) ? 1.0 : 0.0; };
  return run(d, p, s, {f}, n, rng)[0];
}

CrossingReport second_moment_report(const DobrushinDomain& d, Direction dir, const ModelParams& p, Sampler s,
                                    long n, Rng& rng, int grid_points) {
  require_rectangle(d);
  if (dir == Direction::horizontal)
    require(grid_points >= 8, "grid too coarse: need at least 8 points per border");
  auto n_of = [&](const Configuration& c) { return pair_connectivity(c, d, dir, grid_points); };
  std::vector<Functional> fs = {
      [&](const Configuration& c) { return has_crossing(c, d, dir) ? 1.0 : 0.0; },
      [&](const Configuration& c) { return n_of(c); },
      [&](const Configuration& c) { return sq(n_of(c)); },
  };
  auto e = run(d, p, s, fs, n, rng);
  CrossingReport r;
  r.p_hat = e[0].value;
  r.sigma = e[0].sigma;
  r.e_n = e[1].value;
  r.e_n2 = e[2].value;
  r.n_samples = n;
  if (r.e_n2 > 0) {
    r.cs_bound = r.e_n * r.e_n / r.e_n2;
    double rel = 4 * sq(e[1].sigma / r.e_n) + sq(e[2].sigma / r.e_n2);
    r.cs_sigma = r.cs_bound * std::sqrt(rel);
  }
  return r;
}

DobrushinDomain rsw_rectangle(int n, double alpha, double delta) {
  require(n >= 1 && alpha > 0, "need n >= 1 and alpha > 0");
  return build_free_rectangle(2 * n + 1, 2 * alpha * n * delta, delta);
}

}  // namespace sdqi
