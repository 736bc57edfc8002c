#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"

namespace polyvem {

using SpaceTimeScalar = std::function<double(const Point&, double)>;
using SpaceTimeVector = std::function<Point(const Point&, double)>;
using VectorField = std::function<Point(const Point&)>;

/// Data of one benchmark: coefficients, prescribed velocity, boundary/initial
/// data and (when known) the exact fields. E0 is defined on the whole domain
/// (the exact electric field extends the boundary data).
struct ProblemDefinition {
  std::string name;
  std::function<double(const Point&)> sigma;  // conductivity = 1 / resistivity
  double sigma_min = 1.0;
  double sigma_max = 1.0;
  VectorField velocity;
  double velocity_sup = 0.0;
  SpaceTimeScalar E0;
  SpaceTimeVector exact_B;  // may be empty
  SpaceTimeScalar exact_E;  // may be empty
  /// Stream function psi with B = rot psi = (d_y psi, -d_x psi); lets the
  /// initial edge interpolant be computed exactly. May be empty.
  SpaceTimeScalar stream;
  double T = 1.0;

  Point B0(const Point& x) const { return exact_B(x, 0.0); }
  bool has_exact() const { return static_cast<bool>(exact_B) && static_cast<bool>(exact_E); }
};

namespace detail {

inline double sup_norm_on_square(const VectorField& u) {
  double m = 0.0;
  constexpr int n = 200;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) m = std::max(m, u(Point(-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n)).norm());
  return m;
}

inline double checked_denominator(double d) {
  if (std::abs(d) < 1.0) throw DomainError("velocity denominator below 1 in magnitude");
  return d;
}

}  // namespace detail

/// Smooth manufactured solution with rational velocity, sigma = 1, T = 0.25.
inline ProblemDefinition manufactured_problem() {
  ProblemDefinition p;
  p.name = "manufactured";
  p.sigma = [](const Point&) { return 1.0; };
  p.sigma_min = p.sigma_max = 1.0;
  p.velocity = [](const Point& x) -> Point {
    const double xx = x.x(), yy = x.y();
    const double s = std::sin(xx * yy), c = std::cos(xx * yy);
    const double num = (xx * xx + yy * yy - 1.0) * (s + c) - 100.0 * std::exp(xx) + 100.0 * std::exp(yy);
    const double dx = detail::checked_denominator(2.0 * (50.0 * std::exp(xx) - yy * s + yy * c));
    const double dy = detail::checked_denominator(2.0 * (50.0 * std::exp(yy) + xx * s - xx * c));
    return Point(-num / dx, num / dy);
  };
  p.exact_B = [](const Point& x, double t) -> Point {
    const double xx = x.x(), yy = x.y();
    const double s = std::sin(xx * yy), c = std::cos(xx * yy);
    return Point(50.0 * std::exp(yy) + xx * s - xx * c, 50.0 * std::exp(xx) - yy * s + yy * c) * std::exp(-t);
  };
  p.exact_E = [](const Point& x, double t) {
    const double xx = x.x(), yy = x.y();
    return -(50.0 * (std::exp(xx) - std::exp(yy)) + std::cos(xx * yy) + std::sin(xx * yy)) * std::exp(-t);
  };
  p.stream = p.exact_E;  // B = rot E for this solution
  p.E0 = p.exact_E;
  p.T = 0.25;
  p.velocity_sup = detail::sup_norm_on_square(p.velocity);
  return p;
}

namespace detail {

inline ProblemDefinition energy_family_impl(double C, bool printed_by) {
  if (C == 0.0) throw InvalidParameter("energy family: C must be nonzero");
  ProblemDefinition p;
  p.name = printed_by ? "energy_family_printed" : "energy_family";
  p.sigma = [C](const Point&) { return 1.0 / C; };
  p.sigma_min = p.sigma_max = 1.0 / C;
  p.velocity = [C](const Point& x) -> Point {
    const double xx = x.x(), yy = x.y();
    const double s = std::sin(xx * yy), c = std::cos(xx * yy);
    const double num = (-xx * xx - yy * yy - 1.0) * (s + c);
    const double dx = checked_denominator(2.0 * (50.0 * std::exp(xx) + yy * s - yy * c));
    const double dy = checked_denominator(2.0 * (50.0 * std::exp(yy) - xx * s + xx * c));
    return Point(-C * num / dx, C * num / dy);
  };
  const double by_sign = printed_by ? 1.0 : -1.0;
  p.exact_B = [C, by_sign](const Point& x, double t) -> Point {
    const double xx = x.x(), yy = x.y();
    const double s = std::sin(xx * yy), c = std::cos(xx * yy);
    return Point(50.0 * std::exp(yy) - xx * s + xx * c, 50.0 * std::exp(xx) + yy * s + by_sign * yy * c) *
           std::exp(C * t);
  };
  p.exact_E = [C](const Point& x, double t) {
    const double xx = x.x(), yy = x.y();
    return C * (50.0 * (std::exp(xx) - std::exp(yy)) - std::cos(xx * yy) - std::sin(xx * yy)) * std::exp(C * t);
  };
  if (!printed_by) {
    p.stream = [C](const Point& x, double t) {
      const double xx = x.x(), yy = x.y();
      return (50.0 * (std::exp(yy) - std::exp(xx)) + std::cos(xx * yy) + std::sin(xx * yy)) * std::exp(C * t);
    };
  }
  p.E0 = p.exact_E;
  p.T = 0.5;
  p.velocity_sup = sup_norm_on_square(p.velocity);
  return p;
}

}  // namespace detail

/// Exponentially growing family with sigma = 1/C. The y-component of B is
/// 50 e^x + y sin(xy) - y cos(xy), the divergence-free choice consistent with
/// the printed E^C and u^C.
inline ProblemDefinition energy_family_problem(double C) { return detail::energy_family_impl(C, false); }

/// Same family with B_y = 50 e^x + y sin(xy) + y cos(xy) exactly as printed in
/// the source formulas; kept for the residual report (it is not divergence-free).
inline ProblemDefinition energy_family_printed(double C) { return detail::energy_family_impl(C, true); }

/// Steady Hartmann duct flow at Hartmann number 1: B = (B_x(y), 1),
/// u = (u_x(y), 0), constant out-of-plane E_z; sigma = 1.
inline ProblemDefinition hartmann_problem() {
  ProblemDefinition p;
  p.name = "hartmann";
  const double sh = std::sinh(0.5), ch = std::cosh(0.5);
  const double ez = (2.0 * sh - ch) / (2.0 * sh);
  p.sigma = [](const Point&) { return 1.0; };
  p.sigma_min = p.sigma_max = 1.0;
  p.velocity = [sh, ch](const Point& x) -> Point { return Point((ch - std::cosh(x.y())) / (2.0 * sh), 0.0); };
  p.exact_B = [sh](const Point& x, double) -> Point {
    return Point((std::sinh(x.y()) - 2.0 * x.y() * sh) / (2.0 * sh), 1.0);
  };
  p.exact_E = [ez](const Point&, double) { return ez; };
  p.stream = [sh](const Point& x, double) {
    return (std::cosh(x.y()) - x.y() * x.y() * sh) / (2.0 * sh) - x.x();
  };
  p.E0 = p.exact_E;
  p.T = 10.0;
  p.velocity_sup = detail::sup_norm_on_square(p.velocity);
  return p;
}

/// Homogeneous problem (zero data, zero velocity); used for linearity checks.
inline ProblemDefinition zero_problem(double T = 1.0) {
  ProblemDefinition p;
  p.name = "zero";
  p.sigma = [](const Point&) { return 1.0; };
  p.velocity = [](const Point&) { return Point(0.0, 0.0); };
  p.E0 = [](const Point&, double) { return 0.0; };
  p.exact_B = [](const Point&, double) { return Point(0.0, 0.0); };
  p.exact_E = [](const Point&, double) { return 0.0; };
  p.stream = [](const Point&, double) { return 0.0; };
  p.T = T;
  return p;
}

/// Parses `manufactured`, `hartmann`, `energy_family(C=...)`,
/// `energy_family_printed(C=...)`.
inline ProblemDefinition problem_by_name(const std::string& spec) {
  auto strip = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
    return s;
  };
  const std::string s = strip(spec);
  if (s == "manufactured") return manufactured_problem();
  if (s == "hartmann") return hartmann_problem();
  for (const std::string base : {"energy_family_printed", "energy_family"}) {
    if (s.rfind(base, 0) != 0) continue;
    std::string rest = s.substr(base.size());
    double C = 0.1;
    if (!rest.empty()) {
      if (rest.front() != '(' || rest.back() != ')') throw InvalidParameter("bad problem spec '" + spec + "'");
      rest = rest.substr(1, rest.size() - 2);
      if (rest.rfind("C=", 0) == 0) rest = rest.substr(2);
      try {
        std::size_t used = 0;
        C = std::stod(rest, &used);
        if (used != rest.size()) throw InvalidParameter("bad C in '" + spec + "'");
      } catch (const std::logic_error&) {
        throw InvalidParameter("bad C in '" + spec + "'");
      }
    }
    return base == "energy_family" ? energy_family_problem(C) : energy_family_printed(C);
  }
  throw InvalidParameter("unknown problem '" + spec + "'");
}

/// Finite-difference residuals of the continuous system at (x, t):
/// Faraday dB/dt + rot E, Ohm E + u x B - (1/sigma) rot B, and div B.
struct PdeResidual {
  double faraday = 0.0;  // max of the two components
  double ohm = 0.0;
  double divergence = 0.0;
};

inline PdeResidual pde_residual(const ProblemDefinition& p, const Point& x, double t, double step = 1e-5) {
  if (!p.has_exact()) throw UnsupportedProblem("pde residual needs the exact fields");
  const Point ex(step, 0.0), ey(0.0, step);
  const Point dBdt = (p.exact_B(x, t + step) - p.exact_B(x, t - step)) / (2.0 * step);
  const double dEdx = (p.exact_E(x + ex, t) - p.exact_E(x - ex, t)) / (2.0 * step);
  const double dEdy = (p.exact_E(x + ey, t) - p.exact_E(x - ey, t)) / (2.0 * step);
  const Point dBdx = (p.exact_B(x + ex, t) - p.exact_B(x - ex, t)) / (2.0 * step);
  const Point dBdy = (p.exact_B(x + ey, t) - p.exact_B(x - ey, t)) / (2.0 * step);
  const Point B = p.exact_B(x, t);
  const Point u = p.velocity(x);
  PdeResidual r;
  r.faraday = std::max(std::abs(dBdt.x() + dEdy), std::abs(dBdt.y() - dEdx));
  const double rotB = dBdx.y() - dBdy.x();
  const double uxB = u.x() * B.y() - u.y() * B.x();
  r.ohm = std::abs(p.exact_E(x, t) + uxB - rotB / p.sigma(x));
  r.divergence = std::abs(dBdx.x() + dBdy.y());
  return r;
}

/// Largest residuals over `samples` random points of [-0.9,0.9]^2 x [0, T].
inline PdeResidual max_pde_residual(const ProblemDefinition& p, int samples = 20, unsigned seed = 11) {
  std::mt19937_64 rng(seed);
  auto u01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  PdeResidual m;
  for (int i = 0; i < samples; ++i) {
    const Point x(-0.9 + 1.8 * u01(), -0.9 + 1.8 * u01());
    const double t = p.T * u01();
    const auto r = pde_residual(p, x, t);
    m.faraday = std::max(m.faraday, r.faraday);
    m.ohm = std::max(m.ohm, r.ohm);
    m.divergence = std::max(m.divergence, r.divergence);
  }
  return m;
}

}  // namespace polyvem
