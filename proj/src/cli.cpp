#include "sdqi/cli.hpp"

#include <CLI11.hpp>
#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sdqi/acceptance.hpp"
#include "sdqi/bvp.hpp"
#include "sdqi/observable.hpp"
#include "sdqi/sdca.hpp"

namespace sdqi {

namespace {

namespace pt = boost::property_tree;

std::vector<double> numbers(const std::string& s) {
  std::string t = s;
  for (char& ch : t)
    if (ch == ',' || ch == ';') ch = ' ';
  std::istringstream is(t);
  std::vector<double> v;
  double x = 0;
  while (is >> x) v.push_back(x);
  require(is.eof(), "not a list of numbers: '" + s + "'");
  return v;
}

PlanePoint point(const std::string& s) {
  auto v = numbers(s);
  require(v.size() == 2, "expected a point 'x y': '" + s + "'");
  return {v[0], v[1]};
}

std::map<std::string, std::string> section(const pt::ptree& t, const std::string& name) {
  std::map<std::string, std::string> m;
  if (auto s = t.get_child_optional(name))
    for (const auto& [k, v] : *s) m[k] = v.data();
  return m;
}

}  // namespace

DomainSpec parse_domain(std::istream& is) {
  DomainSpec spec;
  std::ostringstream buf;
  buf << is.rdbuf();
  spec.text = buf.str();
  std::istringstream in(spec.text);
  pt::ptree t;
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::invalid_input, std::string("malformed domain file: ") + e.what());
  }
  auto dom = section(t, "domain");
  if (dom.count("polygon")) {
    std::string s = dom["polygon"];
    std::istringstream vs(s);
    std::string item;
    while (std::getline(vs, item, ';'))
      if (item.find_first_not_of(" \t") != std::string::npos) spec.polygon.push_back(point(item));
  } else if (dom.count("rectangle")) {
    auto v = numbers(dom["rectangle"]);
    require(v.size() == 4, "rectangle needs x0 y0 x1 y1");
    spec.polygon = rectangle(v[0], v[1], v[2], v[3]);
  }
  require(spec.polygon.size() >= 4, "domain file needs [domain] polygon or rectangle");
  if (dom.count("delta")) spec.delta = numbers(dom["delta"]).at(0);
  require(spec.delta > 0, "delta must be positive");
  auto marks = section(t, "marks");
  require(marks.count("a") == marks.count("b"), "marks need both a and b");
  if (marks.count("a")) {
    spec.a = point(marks["a"]);
    spec.b = point(marks["b"]);
  }
  spec.model = section(t, "model");
  spec.run = section(t, "run");
  return spec;
}

DomainSpec load_domain(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot read domain file " + path);
  return parse_domain(f);
}

DobrushinDomain DomainSpec::build(double d) const {
  return marked() ? semidiscretize(polygon, *a, *b, d) : semidiscretize_free(polygon, d);
}

ModelParams DomainSpec::params(double d) const {
  auto get = [this](const char* k) -> std::optional<std::string> {
    auto it = model.find(k);
    if (it == model.end()) return std::nullopt;
    return it->second;
  };
  WeightForm form = WeightForm::fk_2k;
  if (auto f = get("form")) {
    require(*f == "fk" || *f == "loop", "model form must be fk or loop");
    form = *f == "loop" ? WeightForm::loop_sqrt2l : WeightForm::fk_2k;
  }
  ModelParams p = critical_params(d, form, marked() ? Bc::wired_on_arc : Bc::free);
  if (auto v = get("lambda")) p.lambda = numbers(*v).at(0);
  if (auto v = get("mu")) p.mu = numbers(*v).at(0);
  if (auto v = get("q")) p.q_weight = numbers(*v).at(0);
  p.validate();
  return p;
}

BoundaryData load_boundary_data(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot read boundary data file " + path);
  pt::ptree t;
  try {
    pt::read_ini(f, t);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::invalid_input, std::string("malformed boundary data file: ") + e.what());
  }
  BoundaryData bd;
  for (auto& [k, v] : section(t, "bc")) {
    if (k == "type") {
      bd.type = v;
    } else if (k == "wired") {
      bd.wired = numbers(v).at(0);
    } else if (k == "free") {
      bd.free = numbers(v).at(0);
    } else if (k.size() == 3 && k[0] == 'c' && std::isdigit(k[1]) && std::isdigit(k[2])) {
      bd.coef[{k[1] - '0', k[2] - '0'}] = numbers(v).at(0);
    } else {
      fail(ErrorKind::invalid_input, "unknown boundary data key " + k);
    }
  }
  require(bd.type == "polynomial" || bd.type == "arcs", "bc type must be polynomial or arcs");
  return bd;
}

namespace {

// Options of one subcommand, with [run] fallbacks and a canonical dump for the config hash.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + name, var, help);
    items_.push_back({name, o,
                      [&var, name](const std::string& s) {
                        require(CLI::detail::lexical_cast(s, var), "bad value for " + name + ": '" + s + "'");
                      },
                      [&var] {
                        std::ostringstream os;
                        os << std::setprecision(17) << var;
                        return os.str();
                      }});
    return o;
  }

  void apply_defaults(const std::map<std::string, std::string>& run) {
    for (auto& it : items_) {
      auto f = run.find(it.name);
      if (it.opt->count() == 0 && f != run.end()) it.set(f->second);
    }
  }

  std::string canonical() const {
    std::string s = std::string(app_->get_name()) + "\n";
    for (const auto& it : items_)
      if (it.name != "out" && it.name != "out-dir" && it.name != "threads") s += it.name + "=" + it.get() + "\n";
    return s;
  }

 private:
  struct Item {
    std::string name;
    CLI::Option* opt;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  CLI::App* app_;
  std::vector<Item> items_;
};

struct Output {
  std::string dir = ".";
  std::string config;  // canonical configuration text
  std::uint64_t seed = 0;

  std::string path(const std::string& name) const {
    std::filesystem::path p = std::filesystem::path(dir) / name;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p.string();
  }

  std::string hash() const {
    boost::crc_32_type crc;
    crc.process_bytes(config.data(), config.size());
    std::ostringstream os;
    os << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();
    return os.str();
  }

  std::ofstream open(const std::string& name) const {
    std::ofstream f(path(name));
    require(f.good(), "cannot write " + name);
    return f;
  }

  void csv_header(std::ostream& os) const {
    os << "# sdqi " << kVersion << " config=" << hash() << " seed=" << seed << "\n";
  }
};

Sampler sampler_of(const std::string& s) { return s == "is" ? Sampler::importance : Sampler::mcmc; }

Configuration sample_configuration(const DobrushinDomain& d, const ModelParams& p, std::uint64_t seed, int sweeps) {
  Rng rng(seed, 0);
  ChainState s = make_chain(d, p, Configuration(d));
  const double mass = std::max(1.0, birth_mass(d, p));
  const long steps = static_cast<long>(std::ceil((10 + sweeps) * mass));
  for (long i = 0; i < steps; ++i) mcmc_step(s, d, p, rng);
  return s.config;
}

std::vector<int> int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : numbers(s)) {
    require(v == std::floor(v), "expected integers: '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-discrete FK-Ising experiments", "sdqi"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string domain_path, out_dir = ".", out_name;
  std::uint64_t seed = 1;
  int threads = 0;

  std::map<const CLI::App*, std::string> default_out;
  auto common = [&](CLI::App* sub, Flags& f, bool needs_domain, const std::string& out_file) {
    default_out[sub] = out_file;
    auto* d = f.add("domain", domain_path, "domain file");
    if (needs_domain) d->required();
    f.add("out-dir", out_dir, "root directory for outputs");
    f.add("out", out_name, "output file, relative to --out-dir");
  };

  // sample / trace
  int sweeps = 20;
  auto* sample = app.add_subcommand("sample", "draw one configuration of the critical model by MCMC");
  Flags f_sample(sample);
  common(sample, f_sample, true, "config.txt");
  f_sample.add("seed", seed, "64-bit seed");
  f_sample.add("sweeps", sweeps, "MCMC sweeps after burn-in, in units of the expected point count");

  auto* trace = app.add_subcommand("trace", "sample a configuration and draw its loops as SVG");
  Flags f_trace(trace);
  common(trace, f_trace, true, "trace.svg");
  f_trace.add("seed", seed, "64-bit seed");
  f_trace.add("sweeps", sweeps, "MCMC sweeps after burn-in");

  // observable
  long samples = 10000;
  double grid_hy = 0, band_c = 1.0;
  std::string sampler = "mcmc", h_out;
  int batches = 32;
  auto* obs = app.add_subcommand("observable", "Monte Carlo estimate of the fermionic observable");
  Flags f_obs(obs);
  common(obs, f_obs, true, "observable.csv");
  f_obs.add("samples", samples, "number of interfaces");
  f_obs.add("grid-hy", grid_hy, "y-step of the mid-edge grid (default delta/4)");
  f_obs.add("seed", seed, "64-bit seed");
  f_obs.add("sampler", sampler, "mcmc or is")->check(CLI::IsMember({"mcmc", "is"}));
  f_obs.add("batches", batches, "independent batches for the error bars");
  f_obs.add("threads", threads, "worker threads (0: all cores)");
  f_obs.add("h-out", h_out, "also write the primitive H from the estimate");
  f_obs.add("band-c", band_c, "C in the 3 sigma + C h_y^2 residual band");

  // green
  std::string zeta;
  double delta = 1.0, tol = 1e-12;
  auto* green = app.add_subcommand("green", "free Green's function on delta Z x R");
  Flags f_green(green);
  f_green.add("zeta", zeta, "lattice point m,t: zeta = m delta + i t")->required();
  f_green.add("delta", delta, "mesh");
  f_green.add("tol", tol, "quadrature tolerance");
  f_green.add("out-dir", out_dir, "root directory for outputs");
  f_green.add("out", out_name, "output CSV (default: standard output)");

  // residues
  int kmax = 8, mmax = 4;
  auto* res = app.add_subcommand("residues", "exact residues of g_{k,m} at +1 and -1");
  Flags f_res(res);
  f_res.add("kmax", kmax, "largest k");
  f_res.add("mmax", mmax, "largest |m|");
  f_res.add("out-dir", out_dir, "root directory for outputs");
  f_res.add("out", out_name, "output CSV");

  // dirichlet
  std::string bc_path, role = "primal";
  double hy = 0;
  auto* dir = app.add_subcommand("dirichlet", "semi-discrete Dirichlet problem");
  Flags f_dir(dir);
  common(dir, f_dir, true, "grid.csv");
  f_dir.add("bc", bc_path, "boundary data file")->required();
  f_dir.add("hy", hy, "y-step (default delta/8)");
  f_dir.add("role", role, "primal or dual columns")->check(CLI::IsMember({"primal", "dual"}));

  // bvp
  std::string ladder = "0.2,0.1,0.05", compact;
  double continuum_h = 1.0 / 256, hy_fraction = 0.25;
  auto* bvp = app.add_subcommand("bvp", "boundary value problem and convergence to the continuum");
  Flags f_bvp(bvp);
  common(bvp, f_bvp, true, "convergence.csv");
  f_bvp.add("ladder", ladder, "decreasing list of meshes");
  f_bvp.add("compact", compact, "x0,y0,x1,y1 (default: middle half of the bounding box)");
  f_bvp.add("continuum-h", continuum_h, "step of the continuum reference grid");
  f_bvp.add("hy-fraction", hy_fraction, "h_y / delta");

  // rsw
  double alpha = 1.0;
  std::string n_ladder = "4,8,16", direction = "both";
  int grid_points = 16;
  auto* rsw = app.add_subcommand("rsw", "crossing probabilities of RSW rectangles");
  Flags f_rsw(rsw);
  common(rsw, f_rsw, false, "crossings.csv");
  f_rsw.add("alpha", alpha, "aspect ratio");
  f_rsw.add("n-ladder", n_ladder, "list of n");
  f_rsw.add("samples", samples, "samples per rectangle");
  f_rsw.add("sampler", sampler, "mcmc or is")->check(CLI::IsMember({"mcmc", "is"}));
  f_rsw.add("seed", seed, "64-bit seed");
  f_rsw.add("delta", delta, "mesh");
  f_rsw.add("direction", direction, "horizontal, vertical or both")
      ->check(CLI::IsMember({"horizontal", "vertical", "both"}));
  f_rsw.add("grid-points", grid_points, "points per side for the pair count N");

  // accept
  std::string only;
  bool quick = false;
  std::uint64_t accept_seed = AcceptanceOptions{}.seed;
  auto* acc = app.add_subcommand("accept", "run the acceptance suite");
  Flags f_acc(acc);
  acc->add_flag("--quick", quick, "desk-scale suite (the only one there is)");
  f_acc.add("only", only, "comma-separated criteria to run");
  f_acc.add("seed", accept_seed, "64-bit seed");
  f_acc.add("threads", threads, "worker threads for the observable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Flags* flags = nullptr;
  for (auto [sub, f] : {std::pair{sample, &f_sample}, {trace, &f_trace}, {obs, &f_obs}, {green, &f_green},
                        {res, &f_res}, {dir, &f_dir}, {bvp, &f_bvp}, {rsw, &f_rsw}, {acc, &f_acc}})
    if (app.got_subcommand(sub)) {
      flags = f;
      if (out_name.empty() && default_out.count(sub)) out_name = default_out[sub];
    }

  try {
    std::optional<DomainSpec> spec;
    if (!domain_path.empty()) {
      spec = load_domain(domain_path);
      flags->apply_defaults(spec->run);
    }
    Output o;
    o.dir = out_dir;
    o.seed = seed;
    o.config = flags->canonical() + (spec ? spec->text : std::string());

    if (app.got_subcommand(sample) || app.got_subcommand(trace)) {
      const DobrushinDomain d = spec->build();
      const ModelParams p = spec->params(d.delta());
      const Configuration c = sample_configuration(d, p, seed, sweeps);
      auto f = o.open(out_name);
      if (app.got_subcommand(trace)) {
        f << render_svg(c, d, trace_all(c, d));
        out << "wrote " << o.path(out_name) << "\n";
      } else {
        write_configuration(f, c, d);
        out << "points " << c.size() << " deaths " << c.n_deaths() << " bridges " << c.n_bridges() << " k "
            << weight_clusters(c, d, p.bc) << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(obs)) {
      const DobrushinDomain d = spec->build();
      require(d.has_marks(), "the observable needs [marks] a and b");
      const double h = grid_hy > 0 ? grid_hy : d.delta() / 4;
      const MidedgeGrid g = make_midedge_grid(d, h);
      ObservableOptions opt;
      opt.sampler = sampler_of(sampler);
      opt.batches = batches;
      opt.threads = threads;
      if (spec->model.count("form")) opt.form = spec->params(d.delta()).form;
      const ObservableField f = estimate_observable(d, g, samples, seed, opt);
      {
        auto os = o.open(out_name);
        o.csv_header(os);
        write_observable_csv(os, f);
      }
      const MidedgeField m = f.field();
      if (!h_out.empty()) {
        auto os = o.open(h_out);
        o.csv_header(os);
        write_H_csv(os, accumulate_H(m, d));
      }
      const ResidualMap r = sholomorphic_residual(f, d, band_c);
      out << std::setprecision(6) << "samples " << samples << " points " << g.size() << " parallel defect "
          << f.max_parallel_defect << " residual band fraction " << r.fraction_in_band << "\n";
      return f.max_parallel_defect <= 1e-12 ? 0 : 2;
    }

    if (app.got_subcommand(green)) {
      auto v = numbers(zeta);
      require(v.size() == 2 && v[0] == std::floor(v[0]), "zeta must be m,t with integer m");
      const GreenEvaluation g = green_free(cplx(v[0] * delta, v[1]), delta, tol);
      std::ostringstream os;
      o.csv_header(os);
      os << std::setprecision(17) << "m,t,delta,value,quadrature_error,converged\n"
         << v[0] << ',' << v[1] << ',' << delta << ',' << g.value << ',' << g.quadrature_error << ','
         << (g.converged ? 1 : 0) << '\n';
      if (out_name.empty())
        out << os.str();
      else
        o.open(out_name) << os.str();
      return g.converged ? 0 : 2;
    }

    if (app.got_subcommand(res)) {
      require(kmax >= 0 && mmax >= 0, "kmax and mmax must be nonnegative");
      if (out_name.empty()) out_name = "residues.csv";
      auto os = o.open(out_name);
      o.csv_header(os);
      os << "k,m,res_plus,res_minus\n";
      int bad = 0;
      for (int k = 0; k <= kmax; ++k)
        for (int m = -mmax; m <= mmax; ++m) {
          const Rational rp = residue_gkm(k, m, 1), rm = residue_gkm(k, m, -1);
          os << k << ',' << m << ',' << rp.str() << ',' << rm.str() << '\n';
          if (rp + rm != 0) ++bad;
          if ((k == 0 || k % 2 == 0 || k <= 2 * std::abs(m)) && (rp != 0 || rm != 0)) ++bad;
        }
      out << "wrote " << o.path(out_name) << ", " << bad << " violations\n";
      return bad == 0 ? 0 : 2;
    }

    if (app.got_subcommand(dir)) {
      const DobrushinDomain d = spec->build();
      const BoundaryData bd = load_boundary_data(bc_path);
      require(bd.type != "arcs" || d.has_marks(), "arc boundary data needs [marks]");
      const ColumnDomain cd = extended_column_domain(d, role == "dual" ? Role::dual : Role::primal);
      std::function<double(double, double)> g;
      if (bd.type == "polynomial") {
        g = [bd](double x, double y) {
          double s = 0;
          for (const auto& [ij, c] : bd.coef) s += c * std::pow(x, ij.first) * std::pow(y, ij.second);
          return s;
        };
      } else {
        // exterior walls take the value of the arc they face
        g = [bd, &d](double x, double y) {
          const int q = static_cast<int>(std::lround(4 * x / d.delta()));
          for (int dq : {0, -2, 2, -4, 4})
            if (auto arc = d.arc_at(q + dq, y)) return *arc == Arc::free ? bd.free : bd.wired;
          return 0.5 * (bd.wired + bd.free);
        };
      }
      const double h = hy > 0 ? hy : d.delta() / 8;
      DirichletReport rep;
      const GridFunction sol = solve_dirichlet(cd, g, h, {}, &rep);
      auto os = o.open(out_name);
      o.csv_header(os);
      os << std::setprecision(17) << "q,x,y,value,boundary\n";
      for (const auto& c : sol.cols)
        for (std::size_t j = 0; j < c.y.size(); ++j)
          os << c.q << ',' << c.x << ',' << c.y[j] << ',' << c.v[j].real() << ',' << static_cast<int>(c.boundary[j])
             << '\n';
      out << "unknowns " << rep.unknowns << " residual " << rep.residual << "\n";
      return rep.residual <= 1e-10 ? 0 : 2;
    }

    if (app.got_subcommand(bvp)) {
      require(spec->marked(), "the boundary value problem needs [marks]");
      std::vector<double> lad = numbers(ladder);
      CompactRect cr;
      double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
      for (const auto& v : spec->polygon) {
        x0 = std::min(x0, v.x);
        y0 = std::min(y0, v.y);
        x1 = std::max(x1, v.x);
        y1 = std::max(y1, v.y);
      }
      if (compact.empty()) {
        cr = {0.75 * x0 + 0.25 * x1, 0.75 * y0 + 0.25 * y1, 0.25 * x0 + 0.75 * x1, 0.25 * y0 + 0.75 * y1};
      } else {
        auto v = numbers(compact);
        require(v.size() == 4, "compact needs x0,y0,x1,y1");
        cr = {v[0], v[1], v[2], v[3]};
      }
      const auto rows = convergence_report(spec->polygon, *spec->a, *spec->b, lad, cr, continuum_h, hy_fraction);
      auto os = o.open(out_name);
      o.csv_header(os);
      write_convergence_csv(os, rows);
      double bdev = 0;
      for (const auto& r : rows) {
        bdev = std::max({bdev, r.wired_dev, r.free_dev});
        out << std::setprecision(6) << "delta " << r.delta << " sup_err_F " << r.sup_err_F << " sup_err_H "
            << r.sup_err_H << "\n";
      }
      return bdev <= 1e-6 ? 0 : 2;
    }

    if (app.got_subcommand(rsw)) {
      ModelParams p = spec ? spec->params(delta) : critical_params(delta);
      require(p.bc == Bc::free, "RSW rectangles have free boundary; drop [marks]");
      auto os = o.open(out_name);
      o.csv_header(os);
      os << std::setprecision(17) << "n,alpha,direction,p_hat,sigma,E_N,E_N2,cs_bound,n_samples,sampler\n";
      bool ok = true;
      std::vector<Direction> dirs;
      if (direction != "vertical") dirs.push_back(Direction::horizontal);
      if (direction != "horizontal") dirs.push_back(Direction::vertical);
      for (int n : int_list(n_ladder)) {
        const DobrushinDomain d = rsw_rectangle(n, alpha, delta);
        for (Direction dr : dirs) {
          Rng rng(seed, static_cast<std::uint64_t>(2 * n + (dr == Direction::vertical ? 1 : 0)));
          const CrossingReport r = second_moment_report(d, dr, p, sampler_of(sampler), samples, rng, grid_points);
          ok = ok && r.cs_bound <= r.p_hat + 3 * r.sigma;
          os << n << ',' << alpha << ',' << (dr == Direction::horizontal ? "horizontal" : "vertical") << ','
             << r.p_hat << ',' << r.sigma << ',' << r.e_n << ',' << r.e_n2 << ',' << r.cs_bound << ','
             << r.n_samples << ',' << sampler << '\n';
        }
      }
      return ok ? 0 : 2;
    }

    if (app.got_subcommand(acc)) {
      AcceptanceOptions opt;
      opt.seed = accept_seed;
      opt.threads = threads;
      if (!only.empty()) opt.only = int_list(only);
      const auto results = run_acceptance(opt, &out);
      int failed = 0;
      for (const auto& r : results) failed += r.pass ? 0 : 1;
      out << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
      return failed == 0 ? 0 : 2;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::invalid_input ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace sdqi
