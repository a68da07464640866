#include "travnav/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace travnav {

MeasurementWindow::MeasurementWindow(int horizon, double dt) : horizon_(horizon), dt_(dt) {
  if (horizon < 4) throw std::invalid_argument("NMHE horizon must be >= 4");
  if (dt <= 0.0) throw std::invalid_argument("window dt must be positive");
  buf_.resize(capacity());
}

void MeasurementWindow::push(const MeasurementSample& z, const ControlInput& u) {
  if (size_ < capacity()) {
    buf_[(head_ + size_) % capacity()] = {z, u};
    ++size_;
  } else {
    buf_[head_] = {z, u};
    head_ = (head_ + 1) % capacity();
  }
}

const MeasurementWindow::Entry& MeasurementWindow::entry(int i) const {
  return buf_[(head_ + i) % capacity()];
}

double MeasurementWindow::mean_abs_omega() const {
  if (size_ == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < size_; ++i) sum += std::abs(entry(i).u.omega);
  return sum / size_;
}

namespace {

Eigen::Matrix3d effective_param_weight(const MeasurementWindow& window,
                                       const NmheConfig& config) {
  Eigen::Matrix3d P_p = config.P_p;
  if (window.mean_abs_omega() < config.low_excitation_omega) {
    P_p(1, 1) *= config.nu_prior_boost;
  }
  return P_p;
}

}  // namespace

Eigen::VectorXd nmhe_residuals(const NmheDecision& decision, const MeasurementWindow& window,
                               const NmhePriors& priors, const NmheConfig& config,
                               Eigen::MatrixXd* jac) {
  if (!window.full()) throw std::invalid_argument("nmhe_residuals: window not full");

  const int N = window.horizon();
  const int m = 3 * (N + 1) + 6;
  Eigen::VectorXd r(m);
  if (jac) jac->setZero(m, 6);

  const Eigen::Matrix3d LwT = config.P_w.llt().matrixL().transpose();
  const Eigen::Matrix3d LxT = config.P_x.llt().matrixL().transpose();
  const Eigen::Matrix3d LpT =
      effective_param_weight(window, config).llt().matrixL().transpose();

  const double dt = window.dt();
  const TractionParams p{decision(3), decision(4)};
  const double dth = decision(5);

  State2D x{decision(0), decision(1), decision(2)};
  Eigen::Matrix<double, 3, 5> S = Eigen::Matrix<double, 3, 5>::Zero();
  S.leftCols<3>().setIdentity();

  for (int i = 0; i <= N; ++i) {
    const MeasurementSample& z = window.entry(i).z;
    Eigen::Vector3d w(x.px - z.z_x, x.py - z.z_y, wrap_angle(x.theta - (z.z_theta + dth)));
    r.segment<3>(3 * i) = LwT * w;
    if (jac) {
      Eigen::Matrix<double, 3, 6> D;
      D.leftCols<5>() = S;
      D.col(5) = Eigen::Vector3d(0.0, 0.0, -1.0);
      jac->block<3, 6>(3 * i, 0) = LwT * D;
    }
    if (i == N) break;

    StepJacobians sj;
    x = integrate_step_with_jacobians(x, window.entry(i).u, p, dt, sj);
    Eigen::Matrix3d A;
    Eigen::Matrix<double, 3, 2> B;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) A(a, b) = sj.A[a][b];
      B(a, 0) = sj.B[a][0];
      B(a, 1) = sj.B[a][1];
    }
    S = (A * S).eval();
    S.rightCols<2>() += B;
  }

  const int base = 3 * (N + 1);
  Eigen::Vector3d ax(decision(0) - priors.state.px, decision(1) - priors.state.py,
                     wrap_angle(decision(2) - priors.state.theta));
  r.segment<3>(base) = LxT * ax;
  Eigen::Vector3d ap(decision(3) - priors.mu, decision(4) - priors.nu,
                     wrap_angle(decision(5) - priors.delta_theta));
  r.segment<3>(base + 3) = LpT * ap;
  if (jac) {
    jac->block<3, 3>(base, 0) = LxT;
    jac->block<3, 3>(base + 3, 3) = LpT;
  }
  return r;
}

namespace {

NmheDecision project_box(NmheDecision z) {
  z(2) = wrap_angle(z(2));
  z(3) = std::clamp(z(3), 0.0, 1.0);
  z(4) = std::clamp(z(4), 0.0, 1.0);
  z(5) = wrap_angle(z(5));
  return z;
}

double step_norm(const NmheDecision& a, const NmheDecision& b) {
  NmheDecision d = b - a;
  d(2) = wrap_angle(d(2));
  d(5) = wrap_angle(d(5));
  return d.norm();
}

struct LmResult {
  NmheDecision z;
  double cost = 0.0;
  bool converged = false;
};

LmResult lm_solve(NmheDecision z, const MeasurementWindow& window, const NmhePriors& priors,
                  const NmheConfig& config) {
  z = project_box(z);
  Eigen::MatrixXd J;
  Eigen::VectorXd r = nmhe_residuals(z, window, priors, config, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const Eigen::Matrix<double, 6, 6> H = J.transpose() * J;
    const Eigen::Matrix<double, 6, 1> g = J.transpose() * r;

    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::Matrix<double, 6, 6> Hd = H;
      Hd.diagonal() += lambda * H.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> delta = Hd.ldlt().solve(-g);
      const NmheDecision trial = project_box(z + delta);
      const Eigen::VectorXd rt = nmhe_residuals(trial, window, priors, config);
      const double trial_cost = rt.squaredNorm();
      if (trial_cost < cost) {
        const double moved = step_norm(z, trial);
        z = trial;
        cost = trial_cost;
        r = rt;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (moved < config.convergence_tol) converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted || converged) {
      if (!accepted && cost < 1e-16) converged = true;
      // A rejected step with a tiny gradient is also a solution. The
      // floor scales with sqrt(eps * cost * ||H||), so leave headroom
      // above machine-precision stall.
      if (!accepted && g.lpNorm<Eigen::Infinity>() < 1e-7 * (1.0 + cost)) converged = true;
      break;
    }
    nmhe_residuals(z, window, priors, config, &J);
  }
  return {z, cost, converged};
}

}  // namespace

NmheSolution nmhe_solve(const MeasurementWindow& window, const NmhePriors& priors,
                        const NmheConfig& config,
                        const std::optional<NmheDecision>& initial_guess) {
  if (!window.full()) throw std::invalid_argument("nmhe_solve: window not full");

  std::vector<NmheDecision> starts;
  if (initial_guess) {
    starts.push_back(*initial_guess);
  } else {
    // The heading-offset coupling makes cold starts multimodal; seed a
    // coarse sweep of delta_theta candidates.
    const MeasurementSample& z0 = window.entry(0).z;
    for (double off : {0.0, 0.5 * kPi, kPi, -0.5 * kPi}) {
      NmheDecision z;
      const double dth = wrap_angle(priors.delta_theta + off);
      z << z0.z_x, z0.z_y, wrap_angle(z0.z_theta + dth), priors.mu, priors.nu, dth;
      starts.push_back(z);
    }
  }

  LmResult best;
  bool have = false;
  for (const NmheDecision& s : starts) {
    const LmResult res = lm_solve(s, window, priors, config);
    if (!have || res.cost < best.cost) {
      best = res;
      have = true;
    }
  }

  NmheSolution sol;
  sol.mu = best.z(3);
  sol.nu = best.z(4);
  sol.delta_theta = best.z(5);
  sol.final_cost = best.cost;
  sol.converged = best.converged;

  const int N = window.horizon();
  sol.states.reserve(N + 1);
  State2D x{best.z(0), best.z(1), best.z(2)};
  sol.states.push_back(x);
  const TractionParams p = TractionParams{sol.mu, sol.nu};
  for (int i = 0; i < N; ++i) {
    x = integrate_step(x, window.entry(i).u, p, window.dt());
    sol.states.push_back(x);
  }
  return sol;
}

EkfState ekf_predict(const EkfState& ekf, double gyro, double v_cmd, double mu_est,
                     const Eigen::Matrix3d& Q_ekf, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("ekf_predict: dt must be positive");
  // The gyro drives heading directly: integrate with nu = 1, omega = gyro.
  StepJacobians sj;
  EkfState next;
  next.mean = integrate_step_with_jacobians(ekf.mean, ControlInput{v_cmd, gyro},
                                            TractionParams{mu_est, 1.0}, dt, sj);
  Eigen::Matrix3d F;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) F(a, b) = sj.A[a][b];
  Eigen::Matrix3d P = F * ekf.cov * F.transpose() + Q_ekf * dt;
  next.cov = 0.5 * (P + P.transpose());
  return next;
}

EkfState ekf_update(const EkfState& ekf, const State2D& nmhe_out,
                    const Eigen::Matrix3d& R_ekf) {
  const Eigen::Matrix3d S = ekf.cov + R_ekf;
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(S);
  if (!lu.isInvertible()) {
    throw std::runtime_error("ekf_update: innovation covariance is singular");
  }
  const Eigen::Matrix3d K = ekf.cov * lu.inverse();
  const Eigen::Vector3d innov(nmhe_out.px - ekf.mean.px, nmhe_out.py - ekf.mean.py,
                              wrap_angle(nmhe_out.theta - ekf.mean.theta));
  const Eigen::Vector3d corr = K * innov;

  EkfState next;
  next.mean.px = ekf.mean.px + corr(0);
  next.mean.py = ekf.mean.py + corr(1);
  next.mean.theta = wrap_angle(ekf.mean.theta + corr(2));
  const Eigen::Matrix3d IK = Eigen::Matrix3d::Identity() - K;
  const Eigen::Matrix3d P = IK * ekf.cov * IK.transpose() + K * R_ekf * K.transpose();
  next.cov = 0.5 * (P + P.transpose());
  return next;
}

}  // namespace travnav
