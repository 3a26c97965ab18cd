#include "weinlab/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace weinlab {

namespace {

std::string state_msg(const char* what, double s, double x, double theta) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s at s=%.6g, x=%.6g, theta=%.6g", what, s, x, theta);
  return buf;
}

}  // namespace

StepUnderflow::StepUnderflow(double ss, double xx, double th)
    : integrate_error(state_msg("step size underflow", ss, xx, th)), s(ss), x(xx), theta(th) {}
AmbiguousEndpoint::AmbiguousEndpoint(double xx, double th, double d)
    : integrate_error(state_msg("axis and singular curve both within tolerance", 0.0, xx, th)),
      x(xx), theta(th), denominator(d) {}

const char* to_string(EndpointType t) {
  switch (t) {
    case EndpointType::axis_orthogonal: return "AxisOrthogonal";
    case EndpointType::axis_cusp: return "AxisCusp";
    case EndpointType::singular_circle: return "SingularCircle";
    case EndpointType::line_crossing: return "LineCrossing";
    case EndpointType::periodic_return: return "PeriodicReturn";
    case EndpointType::truncated: return "Truncated";
    case EndpointType::seed: return "Seed";
  }
  return "?";
}

namespace {

using State = std::array<double, 3>;  // x, theta, z

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

constexpr double kWallEventScale = 1e-5;   // |D| <= scale*(1+|a x|) terminates at the wall
constexpr double kWallNearScale = 1e-3;    // underflow this close to the wall counts as convergence
constexpr double kAxisNear = 1e-4;
constexpr double kOrthogonalTol = 1e-6;    // rad; extrapolated limit within this of k*pi

struct System {
  const Params& p;
  const PrescribedFunction& phi;
  double dir;  // +1 forward, -1 backward

  double denominator(const State& y) const { return p.a * y[0] + p.b * std::sin(y[1]); }

  // dir * f(y); false when the state is outside the admissible domain
  // (nonpositive radius or denominator inside the singular guard).
  bool rhs(const State& y, State& dy) const {
    if (y[0] <= 0.0) return false;
    double st = std::sin(y[1]);
    double ct = std::cos(y[1]);
    double denom = p.a * y[0] + p.b * st;
    if (std::fabs(denom) <= eps_singular(p.a, y[0])) return false;
    double tp = (y[0] * phi(ct) - p.a * st) / denom;
    dy[0] = dir * ct;
    dy[1] = dir * tp;
    dy[2] = dir * st;
    return true;
  }
};

struct StepResult {
  State y;
  State k_last;  // f at the end point (FSAL candidate)
  double err = 0.0;
  bool ok = false;
  bool sign_flip = false;  // denominator changed sign across the step
};

StepResult dopri_step(const System& sys, const State& y0, const State& k1, double h, double atol,
                      double rtol, double denom_sign) {
  StepResult r;
  State k2, k3, k4, k5, k6, k7, t;

  auto probe = [&](const State& y, State& k) {
    if (!sys.rhs(y, k)) return false;
    if (denom_sign * sys.denominator(y) < 0.0) {
      r.sign_flip = true;
      return false;
    }
    return true;
  };

  for (int i = 0; i < 3; ++i) t[i] = y0[i] + h * A21 * k1[i];
  if (!probe(t, k2)) return r;
  for (int i = 0; i < 3; ++i) t[i] = y0[i] + h * (A31 * k1[i] + A32 * k2[i]);
  if (!probe(t, k3)) return r;
  for (int i = 0; i < 3; ++i) t[i] = y0[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
  if (!probe(t, k4)) return r;
  for (int i = 0; i < 3; ++i)
    t[i] = y0[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
  if (!probe(t, k5)) return r;
  for (int i = 0; i < 3; ++i)
    t[i] = y0[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
  if (!probe(t, k6)) return r;
  for (int i = 0; i < 3; ++i)
    t[i] = y0[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
  if (!probe(t, k7)) return r;

  r.y = t;
  r.k_last = k7;
  double err2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    double sc = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(t[i]));
    err2 += (e / sc) * (e / sc);
  }
  r.err = std::sqrt(err2 / 3.0);
  r.ok = true;
  return r;
}

// Quadratic (or lower order) interpolation of x as a function of theta
// through the most recent samples.
struct XOfTheta {
  double t0 = 0, t1 = 0, t2 = 0;
  double c0 = 0, c1 = 0, c2 = 0;  // Newton form
  int order = 0;
  double operator()(double th) const {
    if (order == 0) return c0;
    if (order == 1) return c0 + c1 * (th - t0);
    return c0 + (th - t0) * (c1 + (th - t1) * c2);
  }
  double slope(double th) const {
    if (order <= 0) return 0.0;
    if (order == 1) return c1;
    return c1 + c2 * ((th - t0) + (th - t1));
  }
};

XOfTheta fit_x_of_theta(const std::vector<ProfileSample>& trail) {
  XOfTheta f;
  std::size_t n = trail.size();
  f.t0 = trail[n - 1].theta;
  f.c0 = trail[n - 1].x;
  f.order = 0;
  if (n >= 2 && std::fabs(trail[n - 2].theta - f.t0) > 1e-15) {
    f.t1 = trail[n - 2].theta;
    f.c1 = (trail[n - 2].x - f.c0) / (f.t1 - f.t0);
    f.order = 1;
    if (n >= 3 && std::fabs(trail[n - 3].theta - f.t1) > 1e-15 &&
        std::fabs(trail[n - 3].theta - f.t0) > 1e-15) {
      f.t2 = trail[n - 3].theta;
      double d01 = f.c1;
      double d12 = (trail[n - 3].x - trail[n - 2].x) / (f.t2 - f.t1);
      f.c2 = (d12 - d01) / (f.t2 - f.t0);
      f.order = 2;
    }
  }
  return f;
}

EndpointKind axis_endpoint(const std::vector<ProfileSample>& trail) {
  const ProfileSample& last = trail.back();
  double ct = std::cos(last.theta);
  double theta_lim;
  if (std::fabs(ct) > 1e-3) {
    theta_lim = last.theta - last.x * last.kappa1 / ct;
  } else if (trail.size() >= 2) {
    const ProfileSample& prev = trail[trail.size() - 2];
    double dx = last.x - prev.x;
    theta_lim = std::fabs(dx) > 1e-300
                    ? last.theta - last.x * (last.theta - prev.theta) / dx
                    : last.theta;
  } else {
    theta_lim = last.theta;
  }
  EndpointKind e;
  double k = std::round(theta_lim / M_PI);
  double dist = std::fabs(theta_lim - k * M_PI);
  if (dist < kOrthogonalTol) {
    e.type = EndpointType::axis_orthogonal;
    e.theta = k * M_PI;
    e.note = "axis limit, linear extrapolation in x";
  } else {
    e.type = EndpointType::axis_cusp;
    e.theta = theta_lim;
    e.note = "cusp limit, linear extrapolation in x";
  }
  e.x = 0.0;
  e.s = last.s;
  return e;
}

EndpointKind wall_endpoint(const std::vector<ProfileSample>& trail, const Params& p) {
  const ProfileSample& last = trail.back();
  XOfTheta xf = fit_x_of_theta(trail);
  auto dfit = [&](double th) { return p.a * xf(th) + p.b * std::sin(th); };
  auto dfit_slope = [&](double th) { return p.a * xf.slope(th) + p.b * std::cos(th); };

  double th = last.theta;
  double window = 1e-4;
  if (trail.size() >= 3)
    window = 4.0 * std::fabs(last.theta - trail[trail.size() - 3].theta) + 1e-6;

  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    double g = dfit(th);
    double gp = dfit_slope(th);
    if (std::fabs(g) < 1e-14 * (1.0 + std::fabs(p.a * last.x))) {
      converged = true;
      break;
    }
    if (gp == 0.0) break;
    double step = g / gp;
    if (std::fabs(step) > window) break;
    th -= step;
  }
  if (!converged) {
    // Tangential approach (double root): take the argmin of |D| instead.
    double lo = last.theta - window, hi = last.theta + window;
    for (int it = 0; it < 200; ++it) {
      double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (std::fabs(dfit(m1)) < std::fabs(dfit(m2)))
        hi = m2;
      else
        lo = m1;
    }
    th = 0.5 * (lo + hi);
  }

  EndpointKind e;
  e.type = EndpointType::singular_circle;
  e.theta = th;
  e.x = -p.b * std::sin(th) / p.a;  // placed exactly on S
  e.s = last.s;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "quadratic x(theta) extrapolation (order %d), fitted |D| residual %.2e",
                xf.order, std::fabs(dfit(th)));
  e.note = buf;
  return e;
}

double character_min(const Params& p, const PrescribedFunction& phi, double* max_out) {
  double mn = 1e300, mx = -1e300;
  for (int i = 0; i < kValidationGridSize; ++i) {
    double y = -1.0 + 2.0 * i / (kValidationGridSize - 1);
    double v = p.a * p.a + p.b * phi(y);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (max_out) *max_out = mx;
  return mn;
}

}  // namespace

EndpointKind detect_endpoint(const std::vector<ProfileSample>& trail, const Params& p,
                             const PrescribedFunction& phi) {
  (void)phi;
  const ProfileSample& last = trail.back();
  double denom = p.a * last.x + p.b * std::sin(last.theta);
  double ad = std::fabs(denom);
  bool axis_close = last.x <= kAxisNear;
  bool wall_close = ad <= kWallNearScale * (1.0 + std::fabs(p.a * last.x));
  // Axis-orthogonal approaches drive x and D to zero together; a genuine
  // singular-circle limit keeps x away from the axis scale.
  bool corner = last.x * (std::fabs(p.a) + std::fabs(p.b)) <= 20.0 * ad;

  if (last.x <= 10.0 * kAxisEps || (axis_close && corner)) return axis_endpoint(trail);
  if (wall_close && !corner && last.x > 1e3 * kAxisEps) return wall_endpoint(trail, p);
  if (axis_close && wall_close) throw AmbiguousEndpoint(last.x, last.theta, denom);
  if (axis_close) return axis_endpoint(trail);
  throw StepUnderflow(last.s, last.x, last.theta);
}

Orbit integrate(const PhasePoint& start, const Params& p,
                std::shared_ptr<const PrescribedFunction> phi, const IntegrateOptions& opt) {
  if (!phi) throw integrate_error("null prescribed function");
  double char_max = 0.0;
  double char_min = character_min(p, *phi, &char_max);
  if (!(char_min > 0.0) && !(char_max < 0.0))
    throw CharacterViolation("PDE character is parabolic or mixed; orbits are out of scope");

  const double dir = opt.direction == Direction::forward ? 1.0 : -1.0;
  System sys{p, *phi, dir};

  State y{start.x, start.theta, 0.0};
  State k1;
  if (!sys.rhs(y, k1)) throw NearSingular(sys.denominator(y), start.x, start.theta);
  const double denom_sign = sys.denominator(y) >= 0 ? 1.0 : -1.0;

  Orbit orbit;
  orbit.params = p;
  orbit.phi = phi;
  orbit.start_end = EndpointKind{EndpointType::seed, start.theta, start.x, 0.0, ""};
  orbit.samples.push_back(make_sample(0.0, y[0], 0.0, y[1], p, *phi));

  double tau = 0.0;
  double h = std::min(opt.tol.h_max, 1e-3);
  bool wall_armed = true;
  int section_count = 0;
  bool just_rejected = false;

  auto wall_gap = [&](const State& st) {
    return std::fabs(sys.denominator(st)) - kWallEventScale * (1.0 + std::fabs(p.a * st[0]));
  };

  auto finish = [&](EndpointKind e) {
    if (opt.direction == Direction::backward) {
      std::reverse(orbit.samples.begin(), orbit.samples.end());
      orbit.finish_end = orbit.start_end;
      orbit.finish_end.s = 0.0;
      orbit.start_end = e;
    } else {
      orbit.finish_end = e;
    }
    return orbit;
  };

  // Append an exact axis sample for orthogonal limits: both principal
  // curvatures share the limit L solving phi(+-1) = 2aL + bL^2, picked by
  // continuity with sin(theta)/x at the last regular sample.
  auto append_axis_sample = [&](EndpointKind& e) {
    if (e.type != EndpointType::axis_orthogonal) return;
    const ProfileSample& last = orbit.samples.back();
    double cy = std::cos(e.theta) > 0 ? 1.0 : -1.0;
    double ph = (*phi)(cy);
    double disc = p.a * p.a + p.b * ph;
    if (disc < 0) return;
    double r1 = (-p.a + std::sqrt(disc)) / p.b;
    double r2 = (-p.a - std::sqrt(disc)) / p.b;
    double guess = last.kappa2;
    double L = std::fabs(r1 - guess) <= std::fabs(r2 - guess) ? r1 : r2;
    ProfileSample sp;
    double ds = std::fabs(last.x / std::max(std::fabs(std::cos(last.theta)), 1e-6));
    sp.s = last.s + (dir > 0 ? ds : -ds);
    sp.x = 0.0;
    sp.z = last.z + (sp.s - last.s) * std::sin(e.theta);
    sp.theta = e.theta;
    sp.kappa1 = L;
    sp.kappa2 = L;
    sp.H = L;
    sp.K = L * L;
    orbit.samples.push_back(sp);
    e.s = sp.s;
  };

  while (true) {
    if (tau >= opt.s_max - 1e-15) {
      EndpointKind e{EndpointType::truncated, y[1], y[0], dir * tau, ""};
      return finish(e);
    }

    // Step caps: land on s_max, keep theta motion event-resolvable, do not
    // jump the axis, and never let the denominator change sign in one step.
    double hcap = std::min({h, opt.tol.h_max, opt.s_max - tau});
    if (std::fabs(k1[1]) > 1e-12) hcap = std::min(hcap, 0.2 / std::fabs(k1[1]));
    if (k1[0] < -1e-12) hcap = std::min(hcap, 0.9 * y[0] / -k1[0]);
    {
      double denom = sys.denominator(y);
      double ddenom = p.a * k1[0] + p.b * std::cos(y[1]) * k1[1];
      if (denom * ddenom < 0.0)
        hcap = std::min(hcap, 0.5 * std::fabs(denom) / std::fabs(ddenom));
    }
    hcap = std::max(hcap, opt.tol.h_min * 0.5);

    StepResult st = dopri_step(sys, y, k1, hcap, opt.tol.atol, opt.tol.rtol, denom_sign);

    if (!st.ok || st.err > 1.0) {
      double shrink = st.ok ? std::max(0.2, 0.9 * std::pow(st.err, -0.2)) : 0.5;
      h = hcap * std::min(shrink, 0.9);
      just_rejected = true;
      if (h < opt.tol.h_min) {
        EndpointKind e = detect_endpoint(orbit.samples, p, *phi);  // may throw
        append_axis_sample(e);
        return finish(e);
      }
      continue;
    }

    // Event scan over the accepted span [0, hcap].
    struct Hit {
      double s;
      int kind;  // 0 axis, 1 wall, 2 stop line, 3 section
      double line = 0.0;
      int direction = 0;
    };
    std::optional<Hit> best;
    auto consider = [&](double s_loc, int kind, double line, int dirn) {
      if (!best || s_loc < best->s ||
          (s_loc == best->s && kind < best->kind))
        best = Hit{s_loc, kind, line, dirn};
    };

    // Bisection on the step size against a scalar event function.
    auto locate = [&](auto&& g, double g0) -> std::pair<double, State> {
      double lo = 0.0, hi = hcap;
      State yhi = st.y;
      for (int it = 0; it < 80 && hi - lo > kEventLocatorTol; ++it) {
        double mid = 0.5 * (lo + hi);
        StepResult sm = dopri_step(sys, y, k1, mid, opt.tol.atol, opt.tol.rtol, denom_sign);
        if (!sm.ok) {
          hi = mid;  // domain fault: the event is not past this point
          continue;
        }
        if ((g(sm.y) < 0) == (g0 < 0))
          lo = mid;
        else {
          hi = mid;
          yhi = sm.y;
        }
      }
      return {hi, yhi};
    };

    if (opt.stops.stop_at_axis && st.y[0] <= kAxisEps) {
      auto g = [&](const State& s2) { return s2[0] - kAxisEps; };
      auto [sl, yl] = locate(g, y[0] - kAxisEps);
      (void)yl;
      consider(sl, 0, 0, 0);
    }
    if (opt.stops.stop_at_wall && wall_armed && wall_gap(st.y) <= 0.0 && wall_gap(y) > 0.0) {
      auto [sl, yl] = locate(wall_gap, wall_gap(y));
      (void)yl;
      consider(sl, 1, 0, 0);
    }
    for (double line : opt.stops.stop_theta) {
      double g0 = y[1] - line, g1 = st.y[1] - line;
      if (g0 == 0.0) continue;
      if ((g0 < 0) != (g1 < 0) || g1 == 0.0) {
        auto g = [&](const State& s2) { return s2[1] - line; };
        auto [sl, yl] = locate(g, g0);
        (void)yl;
        consider(sl, 2, line, 0);
      }
    }
    if (opt.stops.section_theta) {
      double line = *opt.stops.section_theta;
      double g0 = y[1] - line, g1 = st.y[1] - line;
      if (g0 != 0.0 && ((g0 < 0) != (g1 < 0) || g1 == 0.0)) {
        int crossing_dir = g1 > g0 ? +1 : -1;
        if (opt.stops.section_direction == 0 || crossing_dir == opt.stops.section_direction) {
          auto g = [&](const State& s2) { return s2[1] - line; };
          auto [sl, yl] = locate(g, g0);
          (void)yl;
          consider(sl, 3, line, crossing_dir);
        }
      }
    }

    if (best) {
      bool terminal = true;
      if (best->kind == 3) {
        ++section_count;
        terminal = section_count >= opt.stops.section_hits;
      }
      StepResult fin = dopri_step(sys, y, k1, best->s, opt.tol.atol, opt.tol.rtol, denom_sign);
      if (!fin.ok) fin.y = st.y, fin.k_last = st.k_last;  // fall back to the full step
      tau += best->s;
      y = fin.y;
      k1 = fin.k_last;
      double s_here = dir * tau;
      orbit.samples.push_back(make_sample(s_here, y[0], y[2], y[1], p, *phi));

      if (best->kind == 1) {
        // Wall threshold reached: decide corner vs genuine singular circle.
        double denom = sys.denominator(y);
        bool corner = y[0] * (std::fabs(p.a) + std::fabs(p.b)) <= 20.0 * std::fabs(denom);
        EndpointKind probe = corner ? EndpointKind{} : wall_endpoint(orbit.samples, p);
        bool spurious = corner || probe.x < 1e-3 ||
                        std::fabs(probe.theta - std::round(probe.theta / M_PI) * M_PI) < 1e-3;
        if (spurious) {
          wall_armed = false;  // re-armed if the orbit pulls away
          terminal = false;
        } else if (terminal) {
          probe.s = s_here;
          return finish(probe);
        }
      } else if (best->kind == 0 && terminal) {
        EndpointKind e = axis_endpoint(orbit.samples);
        append_axis_sample(e);
        return finish(e);
      } else if (best->kind == 2 && terminal) {
        EndpointKind e{EndpointType::line_crossing, best->line, y[0], s_here, ""};
        return finish(e);
      } else if (best->kind == 3 && terminal) {
        EndpointKind e{EndpointType::line_crossing, best->line, y[0], s_here, "section"};
        return finish(e);
      }
      // Non-terminal event: resume stepping from the event point.
      h = std::max(hcap - best->s, opt.tol.h_min * 4);
      just_rejected = false;
      continue;
    }

    // Plain accepted step.
    tau += hcap;
    y = st.y;
    k1 = st.k_last;
    if (!wall_armed && wall_gap(y) > 3.0 * kWallEventScale) wall_armed = true;
    double s_here = dir * tau;
    orbit.samples.push_back(make_sample(s_here, y[0], y[2], y[1], p, *phi));
    double grow = st.err > 0 ? 0.9 * std::pow(st.err, -0.2) : 5.0;
    grow = std::min(grow, just_rejected ? 1.0 : 5.0);
    h = hcap * std::max(0.2, grow);
    just_rejected = false;
  }
}

std::optional<double> poincare_return(double x0, const Params& p,
                                      std::shared_ptr<const PrescribedFunction> phi,
                                      double s_max) {
  double phi0 = (*phi)(0.0);
  double section = p.a * phi0 > 0 ? M_PI / 2 : 3 * M_PI / 2;
  PhasePoint seed{x0, section};
  double tp = theta_prime(x0, section, p, *phi);
  if (std::fabs(tp) < 1e-12) return x0;  // the equilibrium is its own return

  IntegrateOptions opt;
  opt.s_max = s_max;
  opt.stops.section_theta = section;
  opt.stops.section_direction = tp > 0 ? -1 : +1;
  opt.stops.section_hits = 1;
  Orbit o = integrate(seed, p, phi, opt);
  if (o.finish_end.type == EndpointType::line_crossing && o.finish_end.note == "section")
    return o.finish_end.x;
  return std::nullopt;
}

OrbitPoint eval_orbit(const Orbit& orbit, double s) {
  const auto& v = orbit.samples;
  if (v.empty()) throw integrate_error("eval_orbit on empty orbit");
  if (s <= v.front().s) return {v.front().x, v.front().theta, v.front().z};
  if (s >= v.back().s) return {v.back().x, v.back().theta, v.back().z};
  std::size_t lo = 0, hi = v.size() - 1;
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (v[mid].s <= s)
      lo = mid;
    else
      hi = mid;
  }
  const ProfileSample& A = v[lo];
  const ProfileSample& B = v[hi];
  double hseg = B.s - A.s;
  if (hseg <= 0) return {A.x, A.theta, A.z};
  double t = (s - A.s) / hseg;
  double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  double h10 = t * (1 - t) * (1 - t);
  double h01 = t * t * (3 - 2 * t);
  double h11 = t * t * (t - 1);
  auto hermite = [&](double pa, double ma, double pb, double mb) {
    return h00 * pa + h10 * hseg * ma + h01 * pb + h11 * hseg * mb;
  };
  OrbitPoint out;
  out.x = hermite(A.x, std::cos(A.theta), B.x, std::cos(B.theta));
  out.theta = hermite(A.theta, A.kappa1, B.theta, B.kappa1);
  out.z = hermite(A.z, std::sin(A.theta), B.z, std::sin(B.theta));
  return out;
}

}  // namespace weinlab
