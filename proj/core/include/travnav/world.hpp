#ifndef TRAVNAV_WORLD_HPP
#define TRAVNAV_WORLD_HPP

#include <utility>
#include <vector>

#include "travnav/kinodynamics.hpp"
#include "travnav/rng.hpp"

namespace travnav {

/// Closed disk of modified linear traction. height > 0 marks a geometric
/// obstacle; height == 0 is a flat hazard (snow analog).
struct Patch {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 1.0;
  double mu = 0.0;
  double height = 0.0;

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    return dx * dx + dy * dy <= radius * radius;
  }
};

/// Ground-truth traction: base values everywhere, overridden inside
/// patches. When patches overlap, the innermost (smallest radius) wins.
struct TractionField {
  double base_mu = 0.9;
  double base_nu = 0.9;
  std::vector<Patch> patches;

  TractionParams traction_at(double x, double y) const;
};

/// Additive Gaussian process noise on the state, expressed as a
/// continuous-time density (per-step std = sigma * sqrt(dt)).
struct ProcessNoise {
  double pos_sigma = 0.0;    // meters / sqrt(s)
  double theta_sigma = 0.0;  // radians / sqrt(s)
};

struct SensorNoise {
  double gnss_sigma = 0.1;        // meters
  double compass_sigma = 0.05;    // radians
  double gyro_sigma = 0.01;       // radians/s
  double delta_theta_true = 0.0;  // compass North offset, [-pi, pi)
};

struct MeasurementSample {
  double z_x = 0.0;
  double z_y = 0.0;
  double z_theta = 0.0;
  double timestamp = 0.0;
};

/// One plant step: RK4 with ground-truth traction at the start state,
/// then additive process noise.
State2D sim_step(const State2D& true_state, const ControlInput& u,
                 const TractionField& field, const ProcessNoise& noise, double dt,
                 Rng& rng);

/// Noisy GNSS + compass sample and gyro reading. The compass reads the
/// heading offset by -delta_theta_true, so theta = z_theta + delta_theta.
std::pair<MeasurementSample, double> sample_sensors(const State2D& true_state,
                                                    double true_yaw_rate,
                                                    const SensorNoise& noise,
                                                    double timestamp, Rng& rng);

}  // namespace travnav

#endif  // TRAVNAV_WORLD_HPP
