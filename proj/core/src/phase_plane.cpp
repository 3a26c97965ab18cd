#include "weinlab/phase_plane.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace weinlab {

std::optional<double> singular_curve(double theta, const Params& p) {
  double v = -p.b * std::sin(theta) / p.a;
  if (v > 0.0) return v;
  return std::nullopt;
}

std::optional<double> nullcline(double theta, const Params& p, const PrescribedFunction& phi) {
  double v = p.a * std::sin(theta) / phi(std::cos(theta));
  if (v > 0.0) return v;
  return std::nullopt;
}

std::optional<PhasePoint> equilibrium(const Params& p, const PrescribedFunction& phi) {
  double phi0 = phi(0.0);
  if (phi0 == 0.0) return std::nullopt;
  if (p.a * phi0 > 0.0) return PhasePoint{p.a / phi0, M_PI / 2};
  return PhasePoint{-p.a / phi0, 3 * M_PI / 2};
}

PDECharacter pde_character(const Params& p, const PrescribedFunction& phi) {
  const int n = kValidationGridSize;
  double mn = 1e300, mx = -1e300, y_min = 0.0, y_max = 0.0;
  for (int i = 0; i < n; ++i) {
    double y = -1.0 + 2.0 * i / (n - 1);
    double v = p.a * p.a + p.b * phi(y);
    if (v < mn) {
      mn = v;
      y_min = y;
    }
    if (v > mx) {
      mx = v;
      y_max = y;
    }
  }
  PDECharacter c{};
  c.min_value = mn;
  c.max_value = mx;
  const double ztol = 1e-12 * (1.0 + p.a * p.a);
  if (std::fabs(mn) <= ztol && std::fabs(mx) <= ztol) {
    c.kind = PDEKind::parabolic;
    c.witness_y = 0.0;
  } else if (mn > 0.0) {
    c.kind = PDEKind::elliptic;
    c.witness_y = y_min;
  } else if (mx < 0.0) {
    c.kind = PDEKind::hyperbolic;
    c.witness_y = y_max;
  } else {
    c.kind = PDEKind::mixed;
    c.witness_y = y_min;
  }
  return c;
}

const char* to_string(PDEKind k) {
  switch (k) {
    case PDEKind::elliptic: return "elliptic";
    case PDEKind::hyperbolic: return "hyperbolic";
    case PDEKind::parabolic: return "parabolic";
    case PDEKind::mixed: return "mixed";
  }
  return "?";
}

Orbit reflect(const Orbit& orbit) {
  bool any1 = false, any2 = false;
  for (const auto& sp : orbit.samples) {
    double t = PhasePoint{sp.x, sp.theta}.reduced();
    if (t < M_PI)
      any1 = true;
    else if (t > M_PI)
      any2 = true;
  }
  if (any1 && any2) throw SpansBothHalves();
  // pi - theta in Theta_1 and 3pi - theta in Theta_2, lifted to the covering
  // line: reflect about pi/2 + k pi where k is the sample's band.
  auto reflect_theta = [&](double theta) {
    double t = PhasePoint{0.1, theta}.reduced();
    double base = theta - t;  // 2 pi * winding
    double tr = t <= M_PI ? M_PI - t : 3 * M_PI - t;
    return base + tr;
  };

  Orbit out;
  out.params = orbit.params;
  out.phi = orbit.phi;
  out.closed = orbit.closed;
  const auto& v = orbit.samples;
  double s0 = v.front().s, s1 = v.back().s;
  double z1 = v.back().z;
  out.samples.reserve(v.size());
  for (auto it = v.rbegin(); it != v.rend(); ++it) {
    ProfileSample sp;
    sp.s = s0 + (s1 - it->s);
    sp.x = it->x;
    sp.theta = reflect_theta(it->theta);
    sp.z = z1 - it->z;
    sp.kappa1 = it->kappa1;  // theta' is invariant under the reflection
    sp.kappa2 = sp.x == 0.0 ? it->kappa2 : std::sin(sp.theta) / sp.x;
    sp.H = 0.5 * (sp.kappa1 + sp.kappa2);
    sp.K = sp.kappa1 * sp.kappa2;
    out.samples.push_back(sp);
  }
  auto reflect_end = [&](EndpointKind e) {
    e.theta = reflect_theta(e.theta);
    return e;
  };
  out.start_end = reflect_end(orbit.finish_end);
  out.finish_end = reflect_end(orbit.start_end);
  out.start_end.s = s0;
  out.finish_end.s = s1;
  return out;
}

double first_integral_residual(const PhasePoint& s0, const PhasePoint& s1, const Params& p,
                               double c) {
  double st0 = std::sin(s0.theta), st1 = std::sin(s1.theta);
  return p.a * (s1.x * st1 - s0.x * st0) + 0.5 * p.b * (st1 * st1 - st0 * st0) -
         0.5 * c * (s1.x * s1.x - s0.x * s0.x);
}

Matrix2 linearization_at_e0(const Params& p, const PrescribedFunction& phi) {
  double phi0 = phi(0.0);
  double disc = p.a * p.a + p.b * phi0;
  if (disc <= 0.0)
    throw NotApplicable("linearization requires elliptic character at y = 0 (a^2 + b phi(0) > 0)");
  if (phi0 == 0.0) throw NotApplicable("equilibrium requires phi(0) != 0");
  double q = p.b + p.a * p.a / phi0;
  Matrix2 m;
  m.m00 = 0.0;
  m.m01 = -1.0;
  m.m10 = disc / (q * q);
  m.m11 = -p.a * phi.derivative(0.0) / disc;
  return m;
}

namespace {
std::string boundary_msg(const char* which, double x, double theta) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "point (x=%.6g, theta=%.6g) lies on %s", x, theta, which);
  return buf;
}
}  // namespace

Region region_of(const PhasePoint& pt, const Params& p, const PrescribedFunction& phi) {
  double t = pt.reduced();
  if (pt.x <= 0.0) throw OnBoundary(boundary_msg("the axis", pt.x, t));
  for (double line : {M_PI / 2, M_PI, 3 * M_PI / 2}) {
    if (std::fabs(t - line) < kRegionEps)
      throw OnBoundary(boundary_msg("a quadrant line", pt.x, t));
  }
  if (t < kRegionEps || 2 * M_PI - t < kRegionEps)
    throw OnBoundary(boundary_msg("the theta = 0 line", pt.x, t));

  Region r{};
  r.half = t < M_PI ? HalfPlane::theta1 : HalfPlane::theta2;
  r.quadrant = static_cast<int>(t / (M_PI / 2));
  if (r.quadrant > 3) r.quadrant = 3;

  auto side_of = [&](std::optional<double> curve) {
    if (!curve) return CurveSide::absent;
    if (std::fabs(pt.x - *curve) < kRegionEps)
      throw OnBoundary(boundary_msg("a dividing curve", pt.x, t));
    return pt.x < *curve ? CurveSide::below : CurveSide::above;
  };
  r.gamma_side = side_of(nullcline(t, p, phi));
  r.s_side = side_of(singular_curve(t, p));

  double ct = std::cos(t);
  r.x_dir = ct > 0 ? 1 : ct < 0 ? -1 : 0;
  double tp = theta_prime(pt.x, t, p, phi);
  r.theta_dir = tp > 0 ? 1 : tp < 0 ? -1 : 0;
  return r;
}

}  // namespace weinlab
