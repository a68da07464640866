#include "travnav/kinodynamics.hpp"

#include <algorithm>
#include <cmath>

namespace travnav {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

TractionParams TractionParams::clamped() const {
  return {std::clamp(mu, 0.0, 1.0), std::clamp(nu, 0.0, 1.0)};
}

StateDerivative derivative(const State2D& state, const ControlInput& u,
                           const TractionParams& p) {
  return {p.mu * u.v * std::cos(state.theta), p.mu * u.v * std::sin(state.theta),
          p.nu * u.omega};
}

State2D integrate_step(const State2D& state, const ControlInput& u,
                       const TractionParams& p, double dt) {
  const StateDerivative k1 = derivative(state, u, p);
  const State2D s2{state.px + 0.5 * dt * k1.dpx, state.py + 0.5 * dt * k1.dpy,
                   state.theta + 0.5 * dt * k1.dtheta};
  const StateDerivative k2 = derivative(s2, u, p);
  const State2D s3{state.px + 0.5 * dt * k2.dpx, state.py + 0.5 * dt * k2.dpy,
                   state.theta + 0.5 * dt * k2.dtheta};
  const StateDerivative k3 = derivative(s3, u, p);
  const State2D s4{state.px + dt * k3.dpx, state.py + dt * k3.dpy,
                   state.theta + dt * k3.dtheta};
  const StateDerivative k4 = derivative(s4, u, p);

  State2D next;
  next.px = state.px + dt / 6.0 * (k1.dpx + 2.0 * k2.dpx + 2.0 * k3.dpx + k4.dpx);
  next.py = state.py + dt / 6.0 * (k1.dpy + 2.0 * k2.dpy + 2.0 * k3.dpy + k4.dpy);
  next.theta =
      wrap_angle(state.theta + dt / 6.0 * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta));
  return next;
}

namespace {

// Stage value and its sensitivity to (px, py, theta, mu, nu) as a 3x5 block.
struct Stage {
  double k[3];
  double dk[3][5];
};

// f and df at a stage point whose own sensitivity is X (3x5).
// f depends on theta (row 2 of X), mu and nu directly.
Stage stage_eval(const double xs[3], const double X[3][5], const ControlInput& u,
                 const TractionParams& p) {
  Stage st{};
  const double c = std::cos(xs[2]);
  const double s = std::sin(xs[2]);
  st.k[0] = p.mu * u.v * c;
  st.k[1] = p.mu * u.v * s;
  st.k[2] = p.nu * u.omega;

  const double dfx_dth = -p.mu * u.v * s;  // d(k0)/dtheta
  const double dfy_dth = p.mu * u.v * c;   // d(k1)/dtheta
  for (int j = 0; j < 5; ++j) {
    st.dk[0][j] = dfx_dth * X[2][j];
    st.dk[1][j] = dfy_dth * X[2][j];
    st.dk[2][j] = 0.0;
  }
  // Direct parameter dependence: columns 3 (mu) and 4 (nu).
  st.dk[0][3] += u.v * c;
  st.dk[1][3] += u.v * s;
  st.dk[2][4] += u.omega;
  return st;
}

}  // namespace

State2D integrate_step_with_jacobians(const State2D& state, const ControlInput& u,
                                      const TractionParams& p, double dt,
                                      StepJacobians& jac) {
  const double x0[3] = {state.px, state.py, state.theta};
  double X0[3][5] = {};
  X0[0][0] = X0[1][1] = X0[2][2] = 1.0;

  const Stage s1 = stage_eval(x0, X0, u, p);

  double x2[3], X2[3][5];
  for (int i = 0; i < 3; ++i) {
    x2[i] = x0[i] + 0.5 * dt * s1.k[i];
    for (int j = 0; j < 5; ++j) X2[i][j] = X0[i][j] + 0.5 * dt * s1.dk[i][j];
  }
  const Stage s2 = stage_eval(x2, X2, u, p);

  double x3[3], X3[3][5];
  for (int i = 0; i < 3; ++i) {
    x3[i] = x0[i] + 0.5 * dt * s2.k[i];
    for (int j = 0; j < 5; ++j) X3[i][j] = X0[i][j] + 0.5 * dt * s2.dk[i][j];
  }
  const Stage s3 = stage_eval(x3, X3, u, p);

  double x4[3], X4[3][5];
  for (int i = 0; i < 3; ++i) {
    x4[i] = x0[i] + dt * s3.k[i];
    for (int j = 0; j < 5; ++j) X4[i][j] = X0[i][j] + dt * s3.dk[i][j];
  }
  const Stage s4 = stage_eval(x4, X4, u, p);

  double xn[3];
  double Xn[3][5];
  for (int i = 0; i < 3; ++i) {
    xn[i] = x0[i] + dt / 6.0 * (s1.k[i] + 2.0 * s2.k[i] + 2.0 * s3.k[i] + s4.k[i]);
    for (int j = 0; j < 5; ++j) {
      Xn[i][j] = X0[i][j] +
                 dt / 6.0 * (s1.dk[i][j] + 2.0 * s2.dk[i][j] + 2.0 * s3.dk[i][j] + s4.dk[i][j]);
    }
  }

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) jac.A[i][j] = Xn[i][j];
    jac.B[i][0] = Xn[i][3];
    jac.B[i][1] = Xn[i][4];
  }
  // Wrapping shifts theta by a constant; sensitivities are unaffected.
  return {xn[0], xn[1], wrap_angle(xn[2])};
}

std::vector<State2D> rollout(const State2D& start, std::span<const ControlInput> controls,
                             const TractionSource& traction_source, double dt) {
  std::vector<State2D> out;
  out.reserve(controls.size());
  State2D s = start;
  for (const ControlInput& u : controls) {
    const TractionParams p = traction_source(s).clamped();
    s = integrate_step(s, u, p, dt);
    out.push_back(s);
  }
  return out;
}

}  // namespace travnav
