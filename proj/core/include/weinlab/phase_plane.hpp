#ifndef WEINLAB_PHASE_PLANE_HPP
#define WEINLAB_PHASE_PLANE_HPP

#include <optional>

#include "weinlab/integrate.hpp"

namespace weinlab {

struct phase_plane_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpansBothHalves : phase_plane_error {
  SpansBothHalves() : phase_plane_error("orbit spans both halves of the phase plane") {}
};
struct OnBoundary : phase_plane_error {
  using phase_plane_error::phase_plane_error;
};
struct NotApplicable : phase_plane_error {
  using phase_plane_error::phase_plane_error;
};

constexpr double kRegionEps = 1e-10;

// S(theta) = -b sin(theta) / a, where positive.
std::optional<double> singular_curve(double theta, const Params& p);

// Gamma(theta) = a sin(theta) / phi(cos theta), where positive (kappa1 = 0).
std::optional<double> nullcline(double theta, const Params& p, const PrescribedFunction& phi);

// e0 = (a/phi(0), pi/2) if a phi(0) > 0, (-a/phi(0), 3pi/2) if a phi(0) < 0.
std::optional<PhasePoint> equilibrium(const Params& p, const PrescribedFunction& phi);

enum class PDEKind { elliptic, hyperbolic, parabolic, mixed };
struct PDECharacter {
  PDEKind kind;
  double witness_y;   // grid point achieving the deciding min/max of a^2 + b phi
  double min_value;
  double max_value;
};
PDECharacter pde_character(const Params& p, const PrescribedFunction& phi);
const char* to_string(PDEKind k);

// Evenness reflection: (x(-s), pi - theta(-s)) in Theta_1, (x(-s), 3pi - theta(-s))
// in Theta_2. The orbit must lie entirely in one half.
Orbit reflect(const Orbit& orbit);

// First integral residual for constant phi == c:
// a(x1 sin t1 - x0 sin t0) + b/2 (sin^2 t1 - sin^2 t0) - c/2 (x1^2 - x0^2).
double first_integral_residual(const PhasePoint& s0, const PhasePoint& s1, const Params& p,
                               double c);

struct Matrix2 {
  double m00, m01, m10, m11;
  double trace() const { return m00 + m11; }
  double det() const { return m00 * m11 - m01 * m10; }
};
// Linearization of the phase-plane system at e0; requires a^2 + b phi(0) > 0.
Matrix2 linearization_at_e0(const Params& p, const PrescribedFunction& phi);

enum class HalfPlane { theta1, theta2 };
enum class CurveSide { below, above, absent };
struct Region {
  HalfPlane half;
  CurveSide gamma_side;
  CurveSide s_side;
  int quadrant;   // 0..3: which of (0,pi/2),(pi/2,pi),(pi,3pi/2),(3pi/2,2pi)
  int x_dir;      // sign of x' = cos theta
  int theta_dir;  // sign of theta'
};
Region region_of(const PhasePoint& pt, const Params& p, const PrescribedFunction& phi);

}  // namespace weinlab

#endif
