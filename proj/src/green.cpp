#include <algorithm>
#include <cmath>

#include "sdqi/sdca.hpp"

namespace sdqi {

namespace {

// log of f_zeta; integer powers make the branch of the inner log irrelevant
cplx log_f(int m, double t, cplx z) {
  cplx l = -std::log(z);
  if (t != 0) l += 2.0 * kI * t * (1.0 / (z + 1.0) + 1.0 / (z - 1.0));
  if (m != 0) l += 2.0 * m * std::log((z + 1.0) / (z - 1.0));
  return l;
}

// d/dt of f_zeta divided by f_zeta
cplx t_multiplier(cplx z) { return 2.0 * kI * (1.0 / (z + 1.0) + 1.0 / (z - 1.0)); }

struct Contour {
  double r, R, theta0;
};

Contour contour_for(int m, double t, double theta0) {
  double d = std::hypot(static_cast<double>(m), t);
  Contour c;
  c.theta0 = theta0;
  c.r = d > 0 ? std::clamp(std::pow(d, -4.0), 1e-8, 0.25) : 0.25;
  c.R = std::clamp(std::pow(d, 4.0), 4.0, 1e8);
  return c;
}

// (1/(8 pi^2 i)) times the keyhole integral of f_zeta * mult^order * ln z, real part.
GreenEvaluation keyhole(int m, double t, double theta0, int order, double tol) {
  Contour c = contour_for(m, t, theta0);
  auto weight = [&](cplx z) {
    cplx f = std::exp(log_f(m, t, z));
    if (order > 0) {
      cplx mu = t_multiplier(z);
      f *= order == 1 ? mu : mu * mu;
    }
    return f;
  };
  double err = 0, e = 0;  // circle errors, then the ray error in e
  auto circle = [&](double rho) {
    double lr = std::log(rho);
    return integrate(
        [&](double th) {
          cplx z = std::polar(rho, th);
          return weight(z) * cplx(lr, th) * kI * z;
        },
        c.theta0 - kPi, c.theta0 + kPi, tol, 8, &e);
  };
  cplx big = circle(c.R);
  err += e;
  cplx small = circle(c.r);
  err += e;
  const cplx dir = std::polar(1.0, c.theta0);
  double lo = std::log(c.r), hi = std::log(c.R);
  int panels = std::max(4, static_cast<int>(std::ceil(hi - lo)));
  cplx ray = integrate([&](double u) { return weight(-std::exp(u) * dir) * std::exp(u); }, lo, hi, tol, panels, &e);
  cplx total = (big - small) / (8 * kPi * kPi * kI) + dir * ray / (4 * kPi);
  GreenEvaluation out;
  out.zeta = cplx(m, t);
  out.value = total.real();
  out.quadrature_error = err / (8 * kPi * kPi) + e / (4 * kPi);
  out.converged = out.quadrature_error <= 1e3 * tol * (1 + std::abs(total));
  return out;
}

double checked(const GreenEvaluation& g) {
  if (!g.converged)
    fail(ErrorKind::quadrature, "Green quadrature did not converge, error " + std::to_string(g.quadrature_error));
  return g.value;
}

int lattice_m(cplx zeta, double delta) {
  double m = zeta.real() / delta;
  long r = std::lround(m);
  require(std::abs(m - static_cast<double>(r)) < 1e-9, "Green argument is not on the lattice");
  return static_cast<int>(r);
}

}  // namespace

GreenEvaluation green_raw(int m, double t, double tol) {
  if (m == 0 && t == 0) return GreenEvaluation{};
  auto g = keyhole(m, t, std::atan2(t, static_cast<double>(m)), 0, tol);
  checked(g);
  return g;
}

double green_raw_dt(int m, double t, double tol) {
  require(m != 0 || t != 0, "derivative at the pole needs a side", ErrorKind::pole);
  return checked(keyhole(m, t, std::atan2(t, static_cast<double>(m)), 1, tol));
}

double green_raw_dtt(int m, double t, double tol) {
  require(m != 0 || t != 0, "derivative at the pole needs a side", ErrorKind::pole);
  return checked(keyhole(m, t, std::atan2(t, static_cast<double>(m)), 2, tol));
}

double green_raw_dt_at_origin(int side, double tol) {
  require(side == 1 || side == -1, "side is +1 or -1");
  return checked(keyhole(0, 0, side * kPi / 2, 1, tol));
}

double green_normalization(double delta) {
  require(delta > 0, "mesh must be positive");
  return (std::log(delta) - std::log(4.0) - kEulerGamma) / (2 * kPi);
}

GreenEvaluation green_free(cplx zeta, double delta, double tol) {
  require(zeta != cplx(0, 0), "Green's function evaluated at the pole", ErrorKind::pole);
  auto g = green_raw(lattice_m(zeta, delta), zeta.imag() / delta, tol);
  g.zeta = zeta;
  g.delta = delta;
  g.value += green_normalization(delta);
  return g;
}

double green_free_dy(cplx zeta, double delta, double tol) {
  return green_raw_dt(lattice_m(zeta, delta), zeta.imag() / delta, tol) / delta;
}

double green_free_dyy(cplx zeta, double delta, double tol) {
  return green_raw_dtt(lattice_m(zeta, delta), zeta.imag() / delta, tol) / (delta * delta);
}

cplx f_zeta(int m, double t, cplx z) { return std::exp(log_f(m, t, z)); }

double check_fzeta_closed(int m, double t, double r, double R, double tol) {
  require(0 < r && r < 1 && 1 < R, "annulus must separate the origin from +-1");
  auto circle = [&](double rho) {
    return integrate(
        [&](double th) {
          cplx z = std::polar(rho, th);
          return f_zeta(m, t, z) * kI * z;
        },
        -kPi, kPi, tol, 16);
  };
  return std::abs(circle(R) - circle(r));
}

namespace {

Rational binom(long n, long j) {
  Rational c = 1;
  for (long i = 0; i < j; ++i) c = c * Rational(n - i) / Rational(i + 1);
  return c;
}

Rational pow_q(Rational b, long e) {
  Rational out = 1;
  if (e < 0) {
    b = 1 / b;
    e = -e;
  }
  for (long i = 0; i < e; ++i) out *= b;
  return out;
}

}  // namespace

Rational residue_gkm(int k, int m, int pole) {
  require(k >= 0 && k <= 16 && std::abs(m) <= 8, "residue oracle bounded to 0 <= k <= 16, |m| <= 8");
  require(pole == 1 || pole == -1, "pole is +1 or -1");
  const long a = k + 2L * m, b = k - 2L * m;
  Rational sum = 0;
  if (pole == 1) {
    if (a <= 0) return 0;
    // z = 1 + y: 2^k (1+y)^{k-1} 2^{-b} (1+y/2)^{-b} / y^a
    const long n = a - 1;
    for (long i = 0; i <= n; ++i) sum += binom(k - 1, i) * binom(-b, n - i) * pow_q(Rational(1, 2), n - i);
    return pow_q(2, k - b) * sum;
  }
  if (b <= 0) return 0;
  // z = -1 + y: 2^k (-1)^{k-1} (1-y)^{k-1} (-2)^{-a} (1-y/2)^{-a} / y^b
  const long n = b - 1;
  for (long i = 0; i <= n; ++i)
    sum += binom(k - 1, i) * pow_q(-1, i) * binom(-a, n - i) * pow_q(Rational(-1, 2), n - i);
  return pow_q(2, k) * pow_q(-1, k - 1) * pow_q(-2, -a) * sum;
}

cplx residue_series_sum(int m, double t, int kmax) {
  cplx total = 0, term = 1;  // (2it)^k / k!
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0) term *= 2.0 * kI * t / static_cast<double>(k);
    Rational s = residue_gkm(k, m, 1) + residue_gkm(k, m, -1);
    total += term * static_cast<double>(s);
  }
  return total;
}

}  // namespace sdqi
