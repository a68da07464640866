#ifndef TRAVNAV_CONTROL_HPP
#define TRAVNAV_CONTROL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "travnav/camera.hpp"
#include "travnav/kinodynamics.hpp"
#include "travnav/rng.hpp"

namespace travnav {

struct MpcConfig {
  int N = 20;
  double dt = 0.15;
  Eigen::Matrix3d Q = Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal();
  Eigen::Matrix3d Q_N = Eigen::Vector3d(10.0, 10.0, 0.0).asDiagonal();
  Eigen::Matrix2d R = Eigen::Vector2d(0.1, 0.05).asDiagonal();
  double W = 2.0;              // clearance weight
  int clearance_samples = 16;  // M
  double clearance_radius = 0.3;
  double nu_bar = 0.8;  // constant angular traction assumed by the planner
  double v_min = 0.0;
  double v_max = 1.0;
  double omega_max = 1.5;
};

struct MppiConfig {
  int num_samples = 4096;  // K
  double lambda = 0.1;
  double sigma_v = 0.3;
  double sigma_omega = 0.5;
  uint64_t seed = 0;
  int threads = 1;  // 0 = hardware concurrency
};

struct ControlSequence {
  std::vector<ControlInput> controls;
};

/// Image-space traction function: projects world points into the frozen
/// frame of a traversability image and bilinearly samples it; 0 outside
/// the field-of-view set (behind camera, off image, beyond max_range).
class TractionLookup {
 public:
  TractionLookup(const TraversabilityImage& img, const CameraConfig& cam);

  double mu(double wx, double wy) const;

 private:
  const TraversabilityImage& img_;
  double cos_th_, sin_th_;
  double fpx_, fpy_;
  double cos_pitch_, sin_pitch_;
  double fwd_, cam_h_;
  double fx_, fy_, cx_, cy_;
  double max_range_sq_;
};

double mu_lookup(const TraversabilityImage& img, const CameraConfig& cam, double wx,
                 double wy);

/// Sum over states of (1 - mu_avg), mu_avg averaged over M uniform draws
/// in the disk of the given radius around each state's position.
double clearance_cost(std::span<const State2D> states, const TractionLookup& lookup, int M,
                      double radius, Rng& rng);

struct RolloutResult {
  std::vector<State2D> states;  // N predicted states after x0
  double cost = 0.0;
};

/// Forward-integrates the controller model (mu from the image lookup at
/// each step's start state, nu held at nu_bar) and evaluates the
/// quadratic tracking cost plus the weighted clearance term. The goal is
/// tracked position-only (heading weights in Q, Q_N are zero).
RolloutResult rollout_cost(const ControlSequence& u_seq, const State2D& x0, double goal_x,
                           double goal_y, const TractionLookup& lookup, const MpcConfig& cfg,
                           Rng& rng);

struct MppiResult {
  ControlSequence output;     // weighted-average control sequence
  ControlInput applied;       // first element
  ControlSequence next_warm;  // output shifted left, last repeated
  double min_cost = 0.0;
  double mean_cost = 0.0;
  double weight_entropy = 0.0;
};

/// One MPPI solve: K perturbed rollouts around the warm start, costs
/// turned into information-theoretic weights, deterministic per seed
/// (per-sample RNG streams, fixed-order reduction).
MppiResult mppi_step(const State2D& x0, double goal_x, double goal_y,
                     const TractionLookup& lookup, const ControlSequence& warm_start,
                     const MppiConfig& mcfg, const MpcConfig& cfg, uint64_t seed);

}  // namespace travnav

#endif  // TRAVNAV_CONTROL_HPP
