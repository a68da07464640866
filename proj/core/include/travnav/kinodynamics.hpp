#ifndef TRAVNAV_KINODYNAMICS_HPP
#define TRAVNAV_KINODYNAMICS_HPP

#include <functional>
#include <span>
#include <vector>

namespace travnav {

constexpr double kPi = 3.141592653589793238462643383279502884;

/// Wrap an angle to [-pi, pi).
double wrap_angle(double a);

/// Planar robot pose. theta is kept in [-pi, pi) after every update.
struct State2D {
  double px = 0.0;
  double py = 0.0;
  double theta = 0.0;
};

/// Commanded linear and angular velocity.
struct ControlInput {
  double v = 0.0;
  double omega = 0.0;
};

/// Traction coefficients: mu scales linear response, nu angular.
/// Both live in [0,1]; 1 = perfect traction, 0 = stuck.
struct TractionParams {
  double mu = 1.0;
  double nu = 1.0;

  TractionParams clamped() const;
};

struct StateDerivative {
  double dpx = 0.0;
  double dpy = 0.0;
  double dtheta = 0.0;
};

/// Affine skid-steer kinodynamics:
///   dpx = mu * v * cos(theta), dpy = mu * v * sin(theta), dtheta = nu * omega
StateDerivative derivative(const State2D& state, const ControlInput& u,
                           const TractionParams& p);

/// One fixed-step RK4 step of `derivative`; theta renormalized.
State2D integrate_step(const State2D& state, const ControlInput& u,
                       const TractionParams& p, double dt);

/// Sensitivities of one RK4 step: A = dnext/dstate (3x3, row-major),
/// B = dnext/d(mu, nu) (3x2, row-major). Used by the moving horizon
/// estimator's Gauss-Newton Jacobian.
struct StepJacobians {
  double A[3][3];
  double B[3][2];
};

State2D integrate_step_with_jacobians(const State2D& state, const ControlInput& u,
                                      const TractionParams& p, double dt,
                                      StepJacobians& jac);

/// Forward rollout; traction is sampled at each step's start state
/// (explicit scheme). Output has one state per control.
using TractionSource = std::function<TractionParams(const State2D&)>;

std::vector<State2D> rollout(const State2D& start, std::span<const ControlInput> controls,
                             const TractionSource& traction_source, double dt);

}  // namespace travnav

#endif  // TRAVNAV_KINODYNAMICS_HPP
