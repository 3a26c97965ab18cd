#ifndef WEINLAB_INTEGRATE_HPP
#define WEINLAB_INTEGRATE_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "weinlab/geometry.hpp"

namespace weinlab {

struct integrate_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Step size collapsed with no wall or axis in reach; carries the last state.
struct StepUnderflow : integrate_error {
  StepUnderflow(double s, double x, double theta);
  double s, x, theta;
};
struct CharacterViolation : integrate_error {
  using integrate_error::integrate_error;
};
// Both the axis and the singular curve are within tolerance of the final
// state; the endpoint kind cannot be decided honestly.
struct AmbiguousEndpoint : integrate_error {
  AmbiguousEndpoint(double x, double theta, double denom);
  double x, theta, denominator;
};

enum class EndpointType {
  axis_orthogonal,  // x -> 0 with theta -> 0 or pi (mod 2pi)
  axis_cusp,        // x -> 0 with sin(theta_limit) != 0
  singular_circle,  // |a x + b sin theta| -> 0 with x bounded away from 0
  line_crossing,    // theta hit a requested stop line
  periodic_return,  // orbit closed onto its seed
  truncated,        // s_max reached
  seed              // the end where the integration started (internal)
};

struct EndpointKind {
  EndpointType type = EndpointType::seed;
  double theta = 0.0;  // limit/crossing angle, covering line
  double x = 0.0;      // limit/crossing radius
  double s = 0.0;      // arc length at the event
  std::string note;    // extrapolation metadata for converged endpoints
};

const char* to_string(EndpointType t);

struct Orbit {
  std::vector<ProfileSample> samples;  // ascending s
  EndpointKind start_end;              // describes samples.front() side
  EndpointKind finish_end;             // describes samples.back() side
  Params params;
  std::shared_ptr<const PrescribedFunction> phi;
  bool closed = false;
};

enum class Direction { forward, backward };

struct Tolerances {
  double atol = 1e-10;
  double rtol = 1e-10;
  double h_max = 1e-2;
  double h_min = 1e-13;
};

// Which events terminate the run. theta stop lines are covering-line values.
struct EventSet {
  std::vector<double> stop_theta;
  bool stop_at_axis = true;
  bool stop_at_wall = true;
  // Poincare section: terminate at the section_hits-th crossing of
  // section_theta whose theta' sign matches section_direction
  // (0 = any direction).
  std::optional<double> section_theta;
  int section_direction = 0;
  int section_hits = 1;
};

struct IntegrateOptions {
  Direction direction = Direction::forward;
  double s_max = 100.0;
  EventSet stops;
  Tolerances tol;
};

constexpr double kAxisEps = 1e-9;        // integration stops at x = kAxisEps
constexpr double kEventLocatorTol = 1e-12;  // |ds| bound for bisection event location

// Integrate the profile system x' = cos t, z' = sin t, t' = theta_prime from
// `start` (z starts at 0). Samples are appended per accepted step; endpoints
// are located by bisection and, for converged ends, extrapolated.
Orbit integrate(const PhasePoint& start, const Params& p,
                std::shared_ptr<const PrescribedFunction> phi, const IntegrateOptions& opt);

// Next crossing of the section through x0 in the opposite theta' direction
// (the half-loop crossing of a closed orbit); absent when another event
// fires first. The section is theta = pi/2 when a phi(0) > 0, else 3pi/2.
std::optional<double> poincare_return(double x0, const Params& p,
                                      std::shared_ptr<const PrescribedFunction> phi,
                                      double s_max = 200.0);

// Classify the terminal behavior from the recent samples (an event fired or
// the step underflowed near a wall). Exposed for tests; integrate() calls it.
EndpointKind detect_endpoint(const std::vector<ProfileSample>& trail, const Params& p,
                             const PrescribedFunction& phi);

struct OrbitPoint {
  double x, theta, z;
};
// Cubic-Hermite evaluation between stored samples (derivatives are exact at
// the nodes, so the interpolation error is O(h^4)).
OrbitPoint eval_orbit(const Orbit& orbit, double s);

}  // namespace weinlab

#endif
