#include "weinlab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace weinlab {

namespace {
std::string at_r(const char* what, double r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s at r = %.6g (delta too large)", what, r);
  return buf;
}
std::string conv_msg(double ratio, int it) {
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "Picard iteration did not converge in %d iterations (last ratio %.4g)", it, ratio);
  return buf;
}
}  // namespace

DomainExit::DomainExit(double rr, const char* what) : radial_error(at_r(what, rr)), r(rr) {}
NoConvergence::NoConvergence(double ratio, int it)
    : radial_error(conv_msg(ratio, it)), last_ratio(ratio), iterations(it) {}

// (T u)(r) = int_0^r finv(F(s)) ds where F solves (b/2a) F^2 + s F = G(s),
// G(s) = int_0^s t g(u'(t)) dt, g(y) = phi(1/sqrt(1+y^2))/a. The root is
// written as F = 2G / (s + sqrt(s^2 + (2b/a) G)), which is stable for both
// signs of b and vanishes at s = 0. finv(w) = w/sqrt(1-w^2) requires |w| < 1.
RadialSolution apply_T(const RadialSolution& current, const Params& p,
                       const PrescribedFunction& phi) {
  const std::size_t n = current.r.size();
  RadialSolution out = current;
  if (n < 2) return out;
  const double h = current.r[1] - current.r[0];

  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = current.uprime[i];
    g[i] = phi(1.0 / std::sqrt(1.0 + v * v)) / p.a;
  }

  double G = 0.0;
  out.uprime[0] = 0.0;
  out.u[0] = 0.0;
  double prev_w = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    double r = current.r[i];
    G += 0.5 * h * (current.r[i - 1] * g[i - 1] + r * g[i]);
    double A = r * r + (2.0 * p.b / p.a) * G;
    if (A < 0.0) throw DomainExit(r, "negative discriminant in the slope equation");
    double F = 2.0 * G / (r + std::sqrt(A));
    if (std::fabs(F) >= 1.0) throw DomainExit(r, "slope magnitude reached the graph limit");
    double w = F / std::sqrt(1.0 - F * F);
    out.uprime[i] = w;
    out.u[i] = out.u[i - 1] + 0.5 * h * (prev_w + w);
    prev_w = w;
  }
  return out;
}

RadialSolution solve_radial(const Params& p, const PrescribedFunction& phi, double delta,
                            Orientation orientation, int n) {
  if (delta <= 0.0) throw radial_error("delta must be positive");
  if (n < 2) throw radial_error("grid must have at least 2 intervals");
  {
    // The fixed-point argument is stated under uniform ellipticity.
    double mn = 1e300;
    for (int i = 0; i < kValidationGridSize; ++i) {
      double y = -1.0 + 2.0 * i / (kValidationGridSize - 1);
      mn = std::min(mn, p.a * p.a + p.b * phi(y));
    }
    if (!(mn > 0.0))
      throw radial_error("radial solver requires elliptic character (a^2 + b phi > 0)");
  }

  RadialSolution sol;
  sol.delta = delta;
  sol.orientation = Orientation::up;
  sol.r.resize(n + 1);
  sol.u.assign(n + 1, 0.0);
  sol.uprime.assign(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) sol.r[i] = delta * i / n;

  const double tol = 1e-12;
  for (int it = 1; it <= 200; ++it) {
    RadialSolution next = apply_T(sol, p, phi);
    double inc = 0.0;
    for (int i = 0; i <= n; ++i) inc = std::max(inc, std::fabs(next.u[i] - sol.u[i]));
    next.increments = std::move(sol.increments);
    next.increments.push_back(inc);
    next.iterations = it;
    std::size_t m = next.increments.size();
    next.contraction_ratio =
        m >= 2 && next.increments[m - 2] > 0 ? next.increments[m - 1] / next.increments[m - 2]
                                             : 0.0;
    sol = std::move(next);
    if (inc < tol) {
      if (orientation == Orientation::down) {
        for (auto& v : sol.u) v = -v;
        for (auto& v : sol.uprime) v = -v;
        sol.orientation = Orientation::down;
      }
      return sol;
    }
  }
  throw NoConvergence(sol.contraction_ratio, sol.iterations);
}

double default_delta(const Params& p, const PrescribedFunction& phi) {
  double max_phi = 0.0;
  for (int i = 0; i < kValidationGridSize; ++i) {
    double y = -1.0 + 2.0 * i / (kValidationGridSize - 1);
    max_phi = std::max(max_phi, std::fabs(phi(y)));
  }
  return 0.1 * std::min({1.0, std::fabs(p.b / p.a), std::fabs(p.a) / max_phi});
}

RadialSolution solve_radial_auto(const Params& p, const PrescribedFunction& phi,
                                 Orientation orientation, int n) {
  double delta = default_delta(p, phi);
  for (int attempt = 0;; ++attempt) {
    try {
      return solve_radial(p, phi, delta, orientation, n);
    } catch (const DomainExit&) {
      if (attempt >= 8) throw;
    } catch (const NoConvergence&) {
      if (attempt >= 8) throw;
    }
    delta *= 0.5;
  }
}

RadialSeed seed_orbit(const RadialSolution& sol) {
  double w = sol.uprime.back();
  RadialSeed seed;
  if (sol.orientation == Orientation::up) {
    seed.point = PhasePoint{sol.delta, std::atan(w)};
    seed.continue_dir = Direction::forward;  // x grows along +s here
  } else {
    seed.point = PhasePoint{sol.delta, M_PI + std::atan(w)};
    seed.continue_dir = Direction::backward;  // +s runs toward the axis on the down patch
  }
  return seed;
}

double radial_residual(const RadialSolution& sol, std::size_t i, const Params& p,
                       const PrescribedFunction& phi) {
  if (i == 0 || i >= sol.r.size()) throw radial_error("residual is defined at interior nodes");
  // Orientation-invariant (phi is even): evaluate on the upward graph.
  double sgn = sol.orientation == Orientation::up ? 1.0 : -1.0;
  double r = sol.r[i];
  double v = sgn * sol.uprime[i];
  double F = v / std::sqrt(1.0 + v * v);
  double g = phi(1.0 / std::sqrt(1.0 + v * v)) / p.a;
  // Differentiating (b/2a) F^2 + r F = G gives F' = (r g - F)/(r + (b/a) F).
  double Fp = (r * g - F) / (r + (p.b / p.a) * F);
  double upp = Fp / std::pow(1.0 - F * F, 1.5);
  double w2 = 1.0 + v * v;
  double k1 = upp / std::pow(w2, 1.5);
  double k2 = v / (r * std::sqrt(w2));
  return p.a * (k1 + k2) + p.b * k1 * k2 - phi(1.0 / std::sqrt(w2));
}

}  // namespace weinlab
