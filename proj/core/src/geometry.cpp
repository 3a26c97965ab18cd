#include "weinlab/geometry.hpp"

#include <cstdio>

namespace weinlab {

namespace {
std::string near_singular_msg(double denom, double x, double theta) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "denominator a*x + b*sin(theta) = %.3e within singular guard at (x=%.6g, theta=%.6g)",
                denom, x, theta);
  return buf;
}
}  // namespace

NearSingular::NearSingular(double denom, double xx, double th)
    : geometry_error(near_singular_msg(denom, xx, th)), denominator(denom), x(xx), theta(th) {}

double theta_prime(double x, double theta, const Params& p, const PrescribedFunction& phi) {
  double st = std::sin(theta);
  double denom = p.a * x + p.b * st;
  if (std::fabs(denom) <= eps_singular(p.a, x)) throw NearSingular(denom, x, theta);
  return (x * phi(std::cos(theta)) - p.a * st) / denom;
}

Curvatures curvatures(double x, double theta, double theta_prime_value) {
  if (x == 0.0) throw AxisPoint();
  Curvatures c;
  c.kappa1 = theta_prime_value;
  c.kappa2 = std::sin(theta) / x;
  c.H = 0.5 * (c.kappa1 + c.kappa2);
  c.K = c.kappa1 * c.kappa2;
  return c;
}

ProfileSample make_sample(double s, double x, double z, double theta, const Params& p,
                          const PrescribedFunction& phi) {
  ProfileSample sp;
  sp.s = s;
  sp.x = x;
  sp.z = z;
  sp.theta = theta;
  Curvatures c = curvatures(x, theta, theta_prime(x, theta, p, phi));
  sp.kappa1 = c.kappa1;
  sp.kappa2 = c.kappa2;
  sp.H = c.H;
  sp.K = c.K;
  return sp;
}

double weingarten_residual(const ProfileSample& sample, const Params& p,
                           const PrescribedFunction& phi) {
  if (sample.x == 0.0) throw AxisPoint();
  return 2.0 * p.a * sample.H + p.b * sample.K - phi(std::cos(sample.theta));
}

}  // namespace weinlab
