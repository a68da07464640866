#include "travnav/world.hpp"

#include <cmath>
#include <limits>

namespace travnav {

TractionParams TractionField::traction_at(double x, double y) const {
  double mu = base_mu;
  double best_radius = std::numeric_limits<double>::infinity();
  for (const Patch& p : patches) {
    if (p.radius < best_radius && p.contains(x, y)) {
      mu = p.mu;
      best_radius = p.radius;
    }
  }
  return TractionParams{mu, base_nu}.clamped();
}

State2D sim_step(const State2D& true_state, const ControlInput& u,
                 const TractionField& field, const ProcessNoise& noise, double dt,
                 Rng& rng) {
  const TractionParams p = field.traction_at(true_state.px, true_state.py);
  State2D next = integrate_step(true_state, u, p, dt);
  if (noise.pos_sigma > 0.0 || noise.theta_sigma > 0.0) {
    const double sq = std::sqrt(dt);
    next.px += rng.normal(0.0, noise.pos_sigma * sq);
    next.py += rng.normal(0.0, noise.pos_sigma * sq);
    next.theta = wrap_angle(next.theta + rng.normal(0.0, noise.theta_sigma * sq));
  }
  return next;
}

std::pair<MeasurementSample, double> sample_sensors(const State2D& true_state,
                                                    double true_yaw_rate,
                                                    const SensorNoise& noise,
                                                    double timestamp, Rng& rng) {
  MeasurementSample z;
  z.z_x = true_state.px + (noise.gnss_sigma > 0.0 ? rng.normal(0.0, noise.gnss_sigma) : 0.0);
  z.z_y = true_state.py + (noise.gnss_sigma > 0.0 ? rng.normal(0.0, noise.gnss_sigma) : 0.0);
  double zt = true_state.theta - noise.delta_theta_true;
  if (noise.compass_sigma > 0.0) zt += rng.normal(0.0, noise.compass_sigma);
  z.z_theta = wrap_angle(zt);
  z.timestamp = timestamp;
  const double gyro =
      true_yaw_rate + (noise.gyro_sigma > 0.0 ? rng.normal(0.0, noise.gyro_sigma) : 0.0);
  return {z, gyro};
}

}  // namespace travnav
