#ifndef WEINLAB_GEOMETRY_HPP
#define WEINLAB_GEOMETRY_HPP

#include <cmath>
#include <stdexcept>

#include "weinlab/phi.hpp"

namespace weinlab {

struct geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Denominator a x + b sin(theta) within the singular guard: the phase point
// is (numerically) on the curve S.
struct NearSingular : geometry_error {
  NearSingular(double denom, double x, double theta);
  double denominator;
  double x;
  double theta;
};
struct AxisPoint : geometry_error {
  AxisPoint() : geometry_error("curvature evaluation at x = 0") {}
};

// Coefficients of 2aH + bK = phi(<N,e3>). Both must be nonzero; the a > 0
// normalization is an orientation convention applied by the classifier, not
// a constraint on the data.
struct Params {
  double a = 1.0;
  double b = 1.0;
  Params() = default;
  Params(double a_, double b_) : a(a_), b(b_) {
    if (a == 0.0 || b == 0.0)
      throw std::invalid_argument("coefficients a and b must both be nonzero");
  }
};

// One point of the generating curve; theta lives on the covering line (not
// reduced mod 2pi) so that winding orbits stay single-valued in s.
struct ProfileSample {
  double s = 0.0;
  double x = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double H = 0.0;
  double K = 0.0;
  double angle_fn() const { return std::cos(theta); }
};

// A phase-plane point. theta is the covering-line value; reduced() gives the
// representative in [0, 2pi) and winding() the band index.
struct PhasePoint {
  double x = 0.0;
  double theta = 0.0;
  double reduced() const {
    double t = std::fmod(theta, 2 * M_PI);
    return t < 0 ? t + 2 * M_PI : t;
  }
  int winding() const { return static_cast<int>(std::floor(theta / (2 * M_PI))); }
};

// Relative guard on the denominator a x + b sin(theta).
inline double eps_singular(double a, double x) { return 1e-9 * (1.0 + std::fabs(a * x)); }

// kappa1 = theta' = (x phi(cos t) - a sin t) / (a x + b sin t).
double theta_prime(double x, double theta, const Params& p, const PrescribedFunction& phi);

struct Curvatures {
  double kappa1;
  double kappa2;
  double H;
  double K;
};
Curvatures curvatures(double x, double theta, double theta_prime_value);

ProfileSample make_sample(double s, double x, double z, double theta, const Params& p,
                          const PrescribedFunction& phi);

// 2aH + bK - phi(cos theta); zero (to tolerance) on any valid sample.
double weingarten_residual(const ProfileSample& sample, const Params& p,
                           const PrescribedFunction& phi);

}  // namespace weinlab

#endif
