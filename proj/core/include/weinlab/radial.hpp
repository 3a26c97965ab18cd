#ifndef WEINLAB_RADIAL_HPP
#define WEINLAB_RADIAL_HPP

#include <vector>

#include "weinlab/geometry.hpp"
#include "weinlab/integrate.hpp"

namespace weinlab {

struct radial_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// The inner square root went negative or |f(u')| reached 1: delta is too
// large for the contraction regime; callers shrink delta and retry.
struct DomainExit : radial_error {
  DomainExit(double r, const char* what);
  double r;
};
struct NoConvergence : radial_error {
  NoConvergence(double ratio, int iterations);
  double last_ratio;
  int iterations;
};

enum class Orientation { up, down };

// A solution of the singular radial IVP on [0, delta]: u' (0) = 0, graph
// meeting the axis orthogonally. Grid is uniform with n+1 nodes.
struct RadialSolution {
  double delta = 0.0;
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> uprime;
  Orientation orientation = Orientation::up;
  int iterations = 0;
  std::vector<double> increments;  // sup-norm Picard increments per iteration
  double contraction_ratio = 0.0;  // last observed increment ratio
};

// One application of the fixed-point operator to the incoming slopes.
RadialSolution apply_T(const RadialSolution& current, const Params& p,
                       const PrescribedFunction& phi);

// Picard iteration from u == 0 until the sup-norm change is < 1e-12 or 200
// iterations; `down` returns the reflection -u.
RadialSolution solve_radial(const Params& p, const PrescribedFunction& phi, double delta,
                            Orientation orientation, int n = 512);

// delta default 0.1 * min(1, |b/a|, a / max phi); halved on failure.
double default_delta(const Params& p, const PrescribedFunction& phi);
RadialSolution solve_radial_auto(const Params& p, const PrescribedFunction& phi,
                                 Orientation orientation = Orientation::up, int n = 512);

struct RadialSeed {
  PhasePoint point;        // (delta, theta at the patch rim)
  Direction continue_dir;  // direction that extends the profile outward
};
// Hand-off point for continuing gamma_+ / gamma_- with the integrator.
RadialSeed seed_orbit(const RadialSolution& sol);

// Weingarten residual of the induced profile at an interior grid node.
double radial_residual(const RadialSolution& sol, std::size_t i, const Params& p,
                       const PrescribedFunction& phi);

}  // namespace weinlab

#endif
