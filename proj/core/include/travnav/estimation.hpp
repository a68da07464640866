#ifndef TRAVNAV_ESTIMATION_HPP
#define TRAVNAV_ESTIMATION_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "travnav/kinodynamics.hpp"
#include "travnav/world.hpp"

namespace travnav {

/// Fixed-capacity chronological buffer of (measurement, applied control)
/// pairs over the estimation horizon. Entry i pairs the sample at step i
/// with the control applied from step i to i+1; the final entry's
/// control is unused by the residuals.
class MeasurementWindow {
 public:
  struct Entry {
    MeasurementSample z;
    ControlInput u;
  };

  MeasurementWindow(int horizon, double dt);

  void push(const MeasurementSample& z, const ControlInput& u);
  bool full() const { return size_ == capacity(); }
  int horizon() const { return horizon_; }
  int capacity() const { return horizon_ + 1; }
  double dt() const { return dt_; }

  /// Entry i in chronological order, i in [0, horizon].
  const Entry& entry(int i) const;

  /// Mean |omega| over the window's applied controls.
  double mean_abs_omega() const;

 private:
  int horizon_;
  double dt_;
  std::vector<Entry> buf_;
  int head_ = 0;  // index of oldest entry
  int size_ = 0;
};

struct NmheConfig {
  int N = 20;
  Eigen::Matrix3d P_x = Eigen::Matrix3d::Identity();                        // arrival, state
  Eigen::Matrix3d P_p = Eigen::Vector3d(10.0, 10.0, 10.0).asDiagonal();     // arrival, params
  Eigen::Matrix3d P_w = Eigen::Vector3d(100.0, 100.0, 10.0).asDiagonal();   // measurement
  int max_iters = 80;
  double convergence_tol = 1e-9;
  // nu is unobservable without angular excitation; below this mean |omega|
  // its prior weight is scaled up to freeze it at the prior.
  double low_excitation_omega = 0.05;
  double nu_prior_boost = 100.0;
};

struct NmhePriors {
  State2D state;        // arrival state prior (x tilde)
  double mu = 0.8;      // parameter priors (p tilde)
  double nu = 0.8;
  double delta_theta = 0.0;
};

struct NmheSolution {
  std::vector<State2D> states;  // N+1 reconstructed states
  double mu = 0.0;
  double nu = 0.0;
  double delta_theta = 0.0;
  double final_cost = 0.0;
  bool converged = false;
};

/// Decision vector layout: (px0, py0, theta0, mu, nu, delta_theta).
using NmheDecision = Eigen::Matrix<double, 6, 1>;

/// Weighted residual vector of the single-shooting NMHE problem:
/// 3(N+1) measurement residuals plus 3 arrival-state and 3 parameter
/// residuals. Heading residuals are wrapped. If jac is non-null it is
/// filled with the analytic Jacobian (forward sensitivity of RK4).
Eigen::VectorXd nmhe_residuals(const NmheDecision& decision, const MeasurementWindow& window,
                               const NmhePriors& priors, const NmheConfig& config,
                               Eigen::MatrixXd* jac = nullptr);

/// Projected Levenberg-Marquardt solve. When initial_guess is absent the
/// solver multi-starts over coarse delta_theta candidates (the heading
/// offset makes the cost multimodal on cold starts).
NmheSolution nmhe_solve(const MeasurementWindow& window, const NmhePriors& priors,
                        const NmheConfig& config,
                        const std::optional<NmheDecision>& initial_guess = std::nullopt);

/// Planar EKF fusing high-rate gyro-driven predictions with NMHE output.
struct EkfState {
  State2D mean;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
};

EkfState ekf_predict(const EkfState& ekf, double gyro, double v_cmd, double mu_est,
                     const Eigen::Matrix3d& Q_ekf, double dt);

/// Identity-measurement update on (px, py, theta) with wrapped heading
/// innovation. Throws if the innovation covariance is singular.
EkfState ekf_update(const EkfState& ekf, const State2D& nmhe_out,
                    const Eigen::Matrix3d& R_ekf);

}  // namespace travnav

#endif  // TRAVNAV_ESTIMATION_HPP
