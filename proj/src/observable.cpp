#include "sdqi/observable.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

namespace sdqi {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool midedge_q(int q) { return mod4(q) % 2 == 1; }

}  // namespace

int MidedgeGrid::slot(int qq) const {
  auto it = std::lower_bound(q.begin(), q.end(), qq);
  if (it == q.end() || *it != qq) return -1;
  return static_cast<int>(it - q.begin());
}

int MidedgeGrid::node(double yy) const {
  const double eps = 1e-9 * h_y;
  auto it = std::lower_bound(y.begin(), y.end(), yy - eps);
  if (it != y.end() && std::abs(*it - yy) <= eps) return static_cast<int>(it - y.begin());
  return -1;
}

bool MidedgeGrid::has(int qq, std::size_t k) const {
  int s = slot(qq);
  if (s < 0) return false;
  auto su = static_cast<std::size_t>(s);
  return k0[su] <= k && k <= k1[su];
}

std::size_t MidedgeGrid::size() const {
  std::size_t n = 0;
  for (std::size_t s = 0; s < q.size(); ++s) n += k1[s] - k0[s] + 1;
  return n;
}

MidedgeGrid make_midedge_grid(const DobrushinDomain& d, double h_y) {
  require(h_y > 0, "grid step must be positive");
  MidedgeGrid g;
  g.delta = d.delta();
  g.h_y = h_y;
  g.q = d.midedge_columns();
  require(!g.q.empty(), "domain has no mid-edge columns");
  g.q_min = d.q_min();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> ends;
  for (int q : g.q) {
    const auto* m = d.midedge(q);
    lo = std::min(lo, m->span.lo);
    hi = std::max(hi, m->span.hi);
    ends.push_back(m->span.lo);
    ends.push_back(m->span.hi);
  }
  const double snap = 1e-6 * h_y;
  const long n = static_cast<long>(std::floor((hi - lo) / h_y + 1e-9));
  for (long j = 0; j <= n; ++j) g.y.push_back(lo + static_cast<double>(j) * h_y);
  // column ends replace uniform nodes they nearly coincide with
  for (double e : ends) {
    auto it = std::lower_bound(g.y.begin(), g.y.end(), e - snap);
    if (it != g.y.end() && std::abs(*it - e) <= snap)
      *it = e;
    else
      g.y.insert(it, e);
  }
  for (int q : g.q) {
    const auto* m = d.midedge(q);
    int a = g.node(m->span.lo), b = g.node(m->span.hi);
    if (a < 0 || b < 0) fail(ErrorKind::corrupt, "column end missing from the grid");
    g.k0.push_back(static_cast<std::size_t>(a));
    g.k1.push_back(static_cast<std::size_t>(b));
  }
  return g;
}

cplx normalization_phase(const DobrushinDomain& d) {
  require(d.has_marks(), "the observable needs marks a and b");
  return tau_direction(d.b().q);
}

cplx MidedgeField::at(int q, std::size_t k) const {
  int s = grid.slot(q);
  if (s < 0) return 0;
  auto su = static_cast<std::size_t>(s);
  if (k < grid.k0[su] || k > grid.k1[su]) return 0;
  return F[su][k - grid.k0[su]];
}

cplx& MidedgeField::ref(int q, std::size_t k) {
  int s = grid.slot(q);
  require(s >= 0 && grid.has(q, k), "point outside the grid");
  auto su = static_cast<std::size_t>(s);
  return F[su][k - grid.k0[su]];
}

double MidedgeField::sig_re(int q, std::size_t k) const {
  if (!has_sigma() || !grid.has(q, k)) return 0;
  auto su = static_cast<std::size_t>(grid.slot(q));
  return sigma_re[su][k - grid.k0[su]];
}

double MidedgeField::sig_im(int q, std::size_t k) const {
  if (!has_sigma() || !grid.has(q, k)) return 0;
  auto su = static_cast<std::size_t>(grid.slot(q));
  return sigma_im[su][k - grid.k0[su]];
}

MidedgeField zero_field(const MidedgeGrid& g) {
  MidedgeField f;
  f.grid = g;
  for (std::size_t s = 0; s < g.q.size(); ++s) f.F.emplace_back(g.k1[s] - g.k0[s] + 1, cplx(0, 0));
  return f;
}

// ---------------------------------------------------------------------------
// Monte Carlo observable

std::size_t ObservableField::point(int q, std::size_t k) const {
  int s = grid.slot(q);
  require(s >= 0 && grid.has(q, k), "point outside the grid");
  std::size_t off = 0;
  for (int i = 0; i < s; ++i) off += grid.k1[static_cast<std::size_t>(i)] - grid.k0[static_cast<std::size_t>(i)] + 1;
  return off + k - grid.k0[static_cast<std::size_t>(s)];
}

cplx ObservableField::estimate(std::size_t i) const {
  cplx s = 0;
  double w = 0;
  for (int b = 0; b < batches; ++b) {
    s += batch_sum[static_cast<std::size_t>(b)][i];
    w += batch_weight[static_cast<std::size_t>(b)];
  }
  require(w > 0, "no samples", ErrorKind::no_samples);
  return phase * (s / w);
}

MidedgeField ObservableField::field() const {
  MidedgeField f = zero_field(grid);
  f.sigma_re.resize(grid.q.size());
  f.sigma_im.resize(grid.q.size());
  std::size_t i = 0;
  for (std::size_t s = 0; s < grid.q.size(); ++s) {
    f.sigma_re[s].assign(f.F[s].size(), 0);
    f.sigma_im[s].assign(f.F[s].size(), 0);
    for (std::size_t j = 0; j < f.F[s].size(); ++j, ++i) {
      f.F[s][j] = estimate(i);
      if (batches < 2) continue;
      double mr = 0, mi = 0, vr = 0, vi = 0;
      int used = 0;
      for (int b = 0; b < batches; ++b) {
        double w = batch_weight[static_cast<std::size_t>(b)];
        if (!(w > 0)) continue;
        cplx v = phase * batch_sum[static_cast<std::size_t>(b)][i] / w;
        ++used;
        double dr = v.real() - mr, di = v.imag() - mi;
        mr += dr / used;
        mi += di / used;
        vr += dr * (v.real() - mr);
        vi += di * (v.imag() - mi);
      }
      if (used < 2) continue;
      f.sigma_re[s][j] = std::sqrt(vr / (used - 1) / used);
      f.sigma_im[s][j] = std::sqrt(vi / (used - 1) / used);
    }
  }
  return f;
}

void tally_interface(ObservableField& f, const DobrushinDomain& d, const InterfacePath& path, int b, double w) {
  (void)d;
  auto& sums = f.batch_sum[static_cast<std::size_t>(b)];
  const double eps = 1e-9 * f.grid.h_y;
  for (std::size_t r = 0; r < path.runs.size(); ++r) {
    const Run& run = path.runs[r];
    int s = f.grid.slot(run.q);
    if (s < 0) fail(ErrorKind::corrupt, "interface run off the mid-edge grid");
    auto su = static_cast<std::size_t>(s);
    const double lo = std::min(run.y_start, run.y_end), hi = std::max(run.y_start, run.y_end);
    const cplx c = eighth_root(path.winding_to_end(r));
    // the contribution to F must lie on the line of the column
    const cplx full = f.phase * c;
    const double defect = std::abs((full * std::conj(tau_direction(run.q))).imag()) / std::abs(full);
    f.max_parallel_defect = std::max(f.max_parallel_defect, defect);
    auto first = std::lower_bound(f.grid.y.begin() + static_cast<long>(f.grid.k0[su]),
                                  f.grid.y.begin() + static_cast<long>(f.grid.k1[su]) + 1, lo - eps);
    std::size_t k = static_cast<std::size_t>(first - f.grid.y.begin());
    const std::size_t base = f.point(run.q, f.grid.k0[su]) - f.grid.k0[su];
    for (; k <= f.grid.k1[su] && f.grid.y[k] <= hi + eps; ++k) {
      sums[base + k] += w * c;
      ++f.hits[base + k];
    }
  }
  f.batch_weight[static_cast<std::size_t>(b)] += w;
}

ObservableField estimate_observable(const DobrushinDomain& d, const MidedgeGrid& grid, long n_samples,
                                    std::uint64_t seed, ObservableOptions opt) {
  require(n_samples > 0, "no samples", ErrorKind::no_samples);
  require(opt.batches >= 1, "need at least one batch");
  require(d.has_marks(), "the observable needs marks a and b");
  const int batches = static_cast<int>(std::min<long>(opt.batches, n_samples));
  const ModelParams p = critical_params(d.delta(), opt.form, Bc::wired_on_arc);

  ObservableField out;
  out.grid = grid;
  out.phase = normalization_phase(d) / std::sqrt(d.delta());
  out.batches = batches;
  out.n_samples = n_samples;
  const std::size_t np = grid.size();
  out.batch_sum.assign(static_cast<std::size_t>(batches), std::vector<cplx>(np, cplx(0, 0)));
  out.batch_weight.assign(static_cast<std::size_t>(batches), 0.0);
  out.hits.assign(np, 0);

  const double expected = std::max(1.0, birth_mass(d, p));
  const long burn = opt.mcmc.burn_in >= 0 ? opt.mcmc.burn_in : static_cast<long>(std::ceil(10 * expected));
  const long thin = opt.mcmc.thin > 0 ? opt.mcmc.thin : std::max(1L, static_cast<long>(std::ceil(expected)));
  const double log_root2 = 0.5 * std::log(2.0);

  // batches write disjoint slots; hits and the defect are merged afterwards
  std::vector<ObservableField> parts(static_cast<std::size_t>(batches));
  auto run_batch = [&](int b) {
    ObservableField& f = parts[static_cast<std::size_t>(b)];
    f.grid = grid;
    f.phase = out.phase;
    f.batches = batches;
    f.batch_sum.assign(static_cast<std::size_t>(batches), {});
    f.batch_sum[static_cast<std::size_t>(b)].assign(np, cplx(0, 0));
    f.batch_weight.assign(static_cast<std::size_t>(batches), 0.0);
    f.hits.assign(np, 0);
    const long n = n_samples / batches + (b < n_samples % batches ? 1 : 0);
    Rng rng(seed, static_cast<std::uint64_t>(b));
    if (opt.sampler == Sampler::mcmc) {
      ChainState s = make_chain(d, p, Configuration(d));
      for (long i = 0; i < burn; ++i) mcmc_step(s, d, p, rng);
      for (long i = 0; i < n; ++i) {
        for (long t = 0; t < thin; ++t) mcmc_step(s, d, p, rng);
        tally_interface(f, d, trace_interface(s.config, d), b, 1.0);
      }
    } else {
      for (long i = 0; i < n; ++i) {
        Configuration c = sample_ppp(d, p.lambda, p.mu, rng);
        LoopDecomposition ld = trace_all(c, d);
        double lw = p.form == WeightForm::loop_sqrt2l
                        ? log_root2 * static_cast<double>(ld.loops.size())
                        : std::log(p.q_weight) * weight_clusters(c, d, p.bc);
        tally_interface(f, d, *ld.interface, b, std::exp(lw));
      }
    }
  };

  int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, batches);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int b = t; b < batches; b += threads) run_batch(b);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (int b = 0; b < batches; ++b) {
    auto& part = parts[static_cast<std::size_t>(b)];
    out.batch_sum[static_cast<std::size_t>(b)] = std::move(part.batch_sum[static_cast<std::size_t>(b)]);
    out.batch_weight[static_cast<std::size_t>(b)] = part.batch_weight[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < np; ++i) out.hits[i] += part.hits[i];
    out.max_parallel_defect = std::max(out.max_parallel_defect, part.max_parallel_defect);
  }
  return out;
}

MedialValue medial_observable(const MidedgeField& f, int q, std::size_t k) {
  require(mod4(q) % 2 == 0, "medial points sit on even columns");
  MedialValue v;
  v.g = f.at(q - 1, k) + f.at(q + 1, k);
  v.sigma_re = std::hypot(f.sig_re(q - 1, k), f.sig_re(q + 1, k));
  v.sigma_im = std::hypot(f.sig_im(q - 1, k), f.sig_im(q + 1, k));
  return v;
}

cplx project(cplx x, cplx tau) { return 0.5 * (x + (tau / std::conj(tau)) * std::conj(x)); }

namespace {

// interior mid-edge nodes with uniform vertical neighbours and interior medial neighbours
template <class Visit>
void residual_points(const MidedgeGrid& g, const DobrushinDomain& d, Visit visit) {
  require(g.q.size() >= 3, "need at least three mid-edge columns");
  const double h = g.h_y;
  for (std::size_t s = 0; s < g.q.size(); ++s) {
    const int q = g.q[s];
    for (std::size_t k = g.k0[s] + 1; k < g.k1[s]; ++k) {
      if (std::abs(g.y[k + 1] - g.y[k] - h) > 1e-9 * h || std::abs(g.y[k] - g.y[k - 1] - h) > 1e-9 * h) continue;
      const auto *mw = d.medial(q - 1), *me = d.medial(q + 1);
      if (!mw || !me || !mw->interior.contains(g.y[k]) || !me->interior.contains(g.y[k])) continue;
      visit(q, k);
    }
  }
}

template <class Value>
cplx dbar(Value F, int q, std::size_t k, double delta, double h) {
  cplx dy = (F(q, k + 1) - F(q, k - 1)) / (2 * h);
  return 0.5 * ((F(q + 2, k) - F(q - 2, k)) / delta - dy / kI);
}

}  // namespace

ResidualMap sholomorphic_residual(const ObservableField& f, const DobrushinDomain& d, double band_c) {
  const auto& g = f.grid;
  const double delta = d.delta(), h = g.h_y;
  ResidualMap out;
  out.band_c = band_c;
  std::size_t inside = 0;
  const MidedgeField m = f.field();
  auto batch_value = [&](int b) {
    return [&f, b](int q, std::size_t k) -> cplx {
      if (!f.grid.has(q, k)) return 0;
      return f.phase * f.batch_sum[static_cast<std::size_t>(b)][f.point(q, k)] /
             f.batch_weight[static_cast<std::size_t>(b)];
    };
  };
  residual_points(g, d, [&](int q, std::size_t k) {
    cplx r = dbar([&m](int qq, std::size_t kk) { return m.at(qq, kk); }, q, k, delta, h);
    double mr = 0, mi = 0, vr = 0, vi = 0;
    int used = 0;
    for (int b = 0; b < f.batches; ++b) {
      if (!(f.batch_weight[static_cast<std::size_t>(b)] > 0)) continue;
      cplx rb = dbar(batch_value(b), q, k, delta, h);
      ++used;
      double dr = rb.real() - mr, di = rb.imag() - mi;
      mr += dr / used;
      mi += di / used;
      vr += dr * (rb.real() - mr);
      vi += di * (rb.imag() - mi);
    }
    double sigma = used > 1 ? std::sqrt((vr + vi) / (used - 1) / used) : 0;
    ResidualPoint p{q, g.y[k], std::abs(r), sigma};
    out.max_residual = std::max(out.max_residual, p.residual);
    if (p.residual <= 3 * p.sigma + band_c * h * h) ++inside;
    out.points.push_back(p);
  });
  require(!out.points.empty(), "no interior mid-edge points");
  out.fraction_in_band = static_cast<double>(inside) / static_cast<double>(out.points.size());
  return out;
}

ResidualMap sholomorphic_residual(const MidedgeField& f, const DobrushinDomain& d, double band_c) {
  const auto& g = f.grid;
  const double delta = d.delta(), h = g.h_y;
  ResidualMap out;
  out.band_c = band_c;
  std::size_t inside = 0;
  residual_points(g, d, [&](int q, std::size_t k) {
      cplx r = dbar([&f](int qq, std::size_t kk) { return f.at(qq, kk); }, q, k, delta, h);
      double vr = 0.25 * ((sq(f.sig_re(q + 2, k)) + sq(f.sig_re(q - 2, k))) / sq(delta) +
                          (sq(f.sig_im(q, k + 1)) + sq(f.sig_im(q, k - 1))) / sq(2 * h));
      double vi = 0.25 * ((sq(f.sig_im(q + 2, k)) + sq(f.sig_im(q - 2, k))) / sq(delta) +
                          (sq(f.sig_re(q, k + 1)) + sq(f.sig_re(q, k - 1))) / sq(2 * h));
      ResidualPoint p{q, g.y[k], std::abs(r), std::sqrt(vr + vi)};
      out.max_residual = std::max(out.max_residual, p.residual);
      if (p.residual <= 3 * p.sigma + band_c * h * h) ++inside;
      out.points.push_back(p);
  });
  require(!out.points.empty(), "no interior mid-edge points");
  out.fraction_in_band = static_cast<double>(inside) / static_cast<double>(out.points.size());
  return out;
}

// ---------------------------------------------------------------------------
// Primitive H

bool PrimitiveField::has(int q, std::size_t k) const {
  if (q < q_min || q > q_max || (q - q_min) % 2 != 0 || k >= grid.y.size()) return false;
  return !std::isnan(H[static_cast<std::size_t>((q - q_min) / 2)][k]);
}

double PrimitiveField::at(int q, std::size_t k) const {
  require(has(q, k), "H is not defined at this point");
  return H[static_cast<std::size_t>((q - q_min) / 2)][k];
}

namespace {

bool medial_exists(const DobrushinDomain& d, int q, double y) {
  const auto* m = d.medial(q);
  if (!m) return false;
  if (!m->interior.empty() && m->interior.contains_closed(y, 1e-12)) return true;
  return m->on_wall(y);
}

// F averaged over node interval [k, k+1] of column q; zero unless the column covers it
cplx interval_mean(const MidedgeField& f, int q, std::size_t k) {
  if (!f.grid.has(q, k) || !f.grid.has(q, k + 1)) return 0;
  return 0.5 * (f.at(q, k) + f.at(q, k + 1));
}

double vertical_increment(const MidedgeField& f, int q, std::size_t k) {
  const double dy = f.grid.y[k + 1] - f.grid.y[k];
  const double sgn = mod4(q) == 0 ? 2.0 : -2.0;
  return sgn * (interval_mean(f, q - 1, k) * std::conj(interval_mean(f, q + 1, k))).imag() * dy;
}

// H(q + 2) - H(q) across mid-edge q + 1 at node k
double horizontal_increment(const MidedgeField& f, int q, std::size_t k, double delta) {
  double jump = delta * std::norm(f.at(q + 1, k));
  return mod4(q) == 0 ? -jump : jump;
}

}  // namespace

PrimitiveField accumulate_H(const MidedgeField& f, const DobrushinDomain& d) {
  require(d.has_marks(), "H needs marks a and b");
  PrimitiveField P;
  P.grid = f.grid;
  const auto& g = f.grid;
  const std::size_t K = g.y.size();
  P.q_min = d.q_min() + (midedge_q(d.q_min()) ? 1 : 0);
  P.q_max = d.q_max() - (midedge_q(d.q_max()) ? 1 : 0);
  const std::size_t nc = static_cast<std::size_t>((P.q_max - P.q_min) / 2 + 1);
  P.H.assign(nc, std::vector<double>(K, kNan));
  std::vector<std::vector<char>> exists(nc, std::vector<char>(K, 0));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < K; ++k) exists[c][k] = medial_exists(d, P.q_min + 2 * static_cast<int>(c), g.y[k]);

  const Mark& b = d.b();
  const int qw = mod4(b.q) == 1 ? b.q + 1 : b.q - 1;
  const int kb = g.node(b.y);
  if (kb < 0) fail(ErrorKind::corrupt, "mark b is not a grid node");
  P.base = {qw, b.y};
  auto cidx = [&](int q) { return static_cast<std::size_t>((q - P.q_min) / 2); };
  require(exists[cidx(qw)][static_cast<std::size_t>(kb)], "b^w is missing from the medial grid");

  std::deque<std::pair<int, std::size_t>> queue;
  P.H[cidx(qw)][static_cast<std::size_t>(kb)] = 0;
  queue.emplace_back(qw, static_cast<std::size_t>(kb));
  auto visit = [&](int q, std::size_t k, double v) {
    double& h = P.H[cidx(q)][k];
    if (std::isnan(h)) {
      h = v;
      queue.emplace_back(q, k);
    }
  };
  while (!queue.empty()) {
    auto [q, k] = queue.front();
    queue.pop_front();
    const double h = P.H[cidx(q)][k];
    const std::size_t c = cidx(q);
    if (k + 1 < K && exists[c][k + 1]) visit(q, k + 1, h + vertical_increment(f, q, k));
    if (k > 0 && exists[c][k - 1]) visit(q, k - 1, h - vertical_increment(f, q, k - 1));
    if (q + 2 <= P.q_max && exists[c + 1][k] && g.has(q + 1, k)) visit(q + 2, k, h + horizontal_increment(f, q, k, d.delta()));
    if (q - 2 >= P.q_min && exists[c - 1][k] && g.has(q - 1, k))
      visit(q - 2, k, h - horizontal_increment(f, q - 2, k, d.delta()));
  }

  // every increment, and every elementary rectangle, must close
  for (int q = P.q_min; q <= P.q_max; q += 2) {
    const std::size_t c = cidx(q);
    for (std::size_t k = 0; k < K; ++k) {
      if (!P.has(q, k)) continue;
      bool up = k + 1 < K && P.has(q, k + 1);
      bool right = q + 2 <= P.q_max && P.has(q + 2, k) && g.has(q + 1, k);
      double dv = 0, dh = 0;
      if (up) {
        dv = vertical_increment(f, q, k);
        P.closure = std::max(P.closure, std::abs(P.H[c][k + 1] - P.H[c][k] - dv));
      }
      if (right) {
        dh = horizontal_increment(f, q, k, d.delta());
        P.closure = std::max(P.closure, std::abs(P.H[c + 1][k] - P.H[c][k] - dh));
      }
      if (up && right && P.has(q + 2, k + 1) && g.has(q + 1, k + 1)) {
        double loop = dv + horizontal_increment(f, q, k + 1, d.delta()) - vertical_increment(f, q + 2, k) - dh;
        P.rectangle_closure = std::max(P.rectangle_closure, std::abs(loop));
      }
    }
  }
  return P;
}

HReport h_diagnostics(const PrimitiveField& P, const MidedgeField& f, const DobrushinDomain& d) {
  HReport r;
  r.closure = P.closure;
  r.rectangle_closure = P.rectangle_closure;
  const auto& y = P.grid.y;
  const std::size_t K = y.size();
  const double delta = d.delta();
  r.min_primal_laplacian = std::numeric_limits<double>::infinity();
  r.max_dual_laplacian = -std::numeric_limits<double>::infinity();
  r.sandwich_primal = -std::numeric_limits<double>::infinity();
  r.sandwich_dual = -std::numeric_limits<double>::infinity();

  for (int q = P.q_min; q <= P.q_max; q += 2) {
    const bool primal = mod4(q) == 0;
    for (std::size_t k = 0; k < K; ++k) {
      if (!P.has(q, k)) continue;
      const double H = P.at(q, k);
      auto arc = d.arc_at(q, y[k]);
      if (primal && arc == Arc::wired) {
        r.wired_dev = std::max(r.wired_dev, std::abs(H - 1));
        ++r.n_wired;
      }
      if (!primal && arc == Arc::free) {
        r.free_dev = std::max(r.free_dev, std::abs(H));
        ++r.n_free;
      }
      if (P.has(q - 2, k) && P.has(q + 2, k) && P.grid.has(q - 1, k) && P.grid.has(q + 1, k)) {
        cplx gp = medial_observable(f, q, k).g;
        double lhs = P.at(q + 2, k) - P.at(q - 2, k);
        r.neighbors_defect = std::max(r.neighbors_defect, std::abs(lhs - (gp * gp * delta).imag()));
      }
      const auto* m = d.medial(q);
      if (!m->interior.contains(y[k]) || k == 0 || k + 1 >= K || !P.has(q, k - 1) || !P.has(q, k + 1)) continue;
      // horizontal neighbours; beyond a wall of the other role H(u_ext) = H(w)
      auto side = [&](int s, double& out) {
        if (P.has(q + 4 * s, k)) {
          out = P.at(q + 4 * s, k);
          return true;
        }
        if (P.has(q + 2 * s, k) && d.medial(q + 2 * s)->on_wall(y[k])) {
          out = P.at(q + 2 * s, k);
          return true;
        }
        return false;
      };
      double hl = 0, hr = 0;
      if (!side(-1, hl) || !side(1, hr)) continue;
      const double hp = y[k + 1] - y[k], hm = y[k] - y[k - 1];
      const double dyy = 2 * ((P.at(q, k + 1) - H) / hp - (H - P.at(q, k - 1)) / hm) / (hp + hm);
      const double lap = (hl + hr - 2 * H) / sq(delta) + dyy;
      if (primal)
        r.min_primal_laplacian = std::min(r.min_primal_laplacian, lap);
      else
        r.max_dual_laplacian = std::max(r.max_dual_laplacian, lap);
    }
  }

  // harmonic functions with the boundary values of H: H stays below on primal
  // columns and above on dual ones
  for (Role role : {Role::primal, Role::dual}) {
    ColumnDomain cd = extended_column_domain(d, role);
    // exterior points take the value of the boundary point between them and the domain
    auto value = [&](int q, std::size_t k) -> double {
      if (P.has(q, k)) return P.at(q, k);
      for (int s : {-2, 2})
        if (P.has(q + s, k)) return P.at(q + s, k);
      fail(ErrorKind::corrupt, "no H value next to an exterior point");
    };
    auto data = [&](double x, double yy) {
      int q = static_cast<int>(std::llround(4 * x / delta));
      int k = P.grid.node(yy);
      if (k >= 0) return value(q, static_cast<std::size_t>(k));
      // between nodes: linear interpolation along the column
      auto it = std::upper_bound(y.begin(), y.end(), yy);
      require(it != y.begin() && it != y.end(), "boundary point outside the grid");
      std::size_t j = static_cast<std::size_t>(it - y.begin());
      double w = (yy - y[j - 1]) / (y[j] - y[j - 1]);
      return (1 - w) * value(q, j - 1) + w * value(q, j);
    };
    GridFunction h = solve_dirichlet(cd, data, P.grid.h_y);
    for (std::size_t i = 0; i < cd.cols.size(); ++i) {
      const int q = cd.q(i);
      for (std::size_t j = 0; j < h.cols[i].y.size(); ++j) {
        if (h.cols[i].boundary[j]) continue;
        int k = P.grid.node(h.cols[i].y[j]);
        if (k < 0 || !P.has(q, static_cast<std::size_t>(k))) continue;
        double diff = P.at(q, static_cast<std::size_t>(k)) - h.cols[i].v[j].real();
        if (role == Role::primal)
          r.sandwich_primal = std::max(r.sandwich_primal, diff);
        else
          r.sandwich_dual = std::max(r.sandwich_dual, -diff);
      }
    }
  }
  return r;
}

void write_observable_csv(std::ostream& os, const ObservableField& f) {
  MidedgeField m = f.field();
  os << std::setprecision(17);
  os << "q,y,re,im,stderr_re,stderr_im,hits,n_samples\n";
  std::size_t i = 0;
  for (std::size_t s = 0; s < f.grid.q.size(); ++s)
    for (std::size_t k = f.grid.k0[s]; k <= f.grid.k1[s]; ++k, ++i) {
      const std::size_t j = k - f.grid.k0[s];
      os << f.grid.q[s] << ',' << f.grid.y[k] << ',' << m.F[s][j].real() << ',' << m.F[s][j].imag() << ','
         << m.sigma_re[s][j] << ',' << m.sigma_im[s][j] << ',' << f.hits[i] << ',' << f.n_samples << '\n';
    }
}

void write_H_csv(std::ostream& os, const PrimitiveField& H) {
  os << std::setprecision(17);
  os << "role,q,y,H\n";
  for (int q = H.q_min; q <= H.q_max; q += 2)
    for (std::size_t k = 0; k < H.grid.y.size(); ++k)
      if (H.has(q, k)) os << (mod4(q) == 0 ? "primal" : "dual") << ',' << q << ',' << H.grid.y[k] << ',' << H.at(q, k) << '\n';
}

}  // namespace sdqi
