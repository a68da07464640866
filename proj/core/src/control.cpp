#include "travnav/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace travnav {

TractionLookup::TractionLookup(const TraversabilityImage& img, const CameraConfig& cam)
    : img_(img) {
  cos_th_ = std::cos(img.frame_pose.theta);
  sin_th_ = std::sin(img.frame_pose.theta);
  fpx_ = img.frame_pose.px;
  fpy_ = img.frame_pose.py;
  cos_pitch_ = std::cos(cam.extrinsics.pitch_down);
  sin_pitch_ = std::sin(cam.extrinsics.pitch_down);
  fwd_ = cam.extrinsics.forward_offset;
  cam_h_ = cam.extrinsics.height_above_ground;
  fx_ = cam.intrinsics.fx;
  fy_ = cam.intrinsics.fy;
  cx_ = cam.intrinsics.cx;
  cy_ = cam.intrinsics.cy;
  max_range_sq_ = cam.max_range * cam.max_range;
}

double TractionLookup::mu(double wx, double wy) const {
  const double dxw = wx - fpx_;
  const double dyw = wy - fpy_;
  if (dxw * dxw + dyw * dyw > max_range_sq_) return 0.0;
  const double rx = cos_th_ * dxw + sin_th_ * dyw;
  const double ry = -sin_th_ * dxw + cos_th_ * dyw;
  const double fx_rel = rx - fwd_;
  const double pcz = cos_pitch_ * fx_rel + sin_pitch_ * cam_h_;
  if (pcz <= 1e-9) return 0.0;
  const double u = cx_ + fx_ * (-ry) / pcz;
  const double v = cy_ + fy_ * (-sin_pitch_ * fx_rel + cos_pitch_ * cam_h_) / pcz;
  if (u < 0.0 || u > img_.width - 1 || v < 0.0 || v > img_.height - 1) return 0.0;
  return bilinear_sample(img_, u, v);
}

double mu_lookup(const TraversabilityImage& img, const CameraConfig& cam, double wx,
                 double wy) {
  return TractionLookup(img, cam).mu(wx, wy);
}

double clearance_cost(std::span<const State2D> states, const TractionLookup& lookup, int M,
                      double radius, Rng& rng) {
  if (M < 1) throw std::invalid_argument("clearance_cost: M must be >= 1");
  double total = 0.0;
  for (const State2D& s : states) {
    double sum = 0.0;
    for (int j = 0; j < M; ++j) {
      double dx, dy;
      rng.uniform_disk(radius, dx, dy);
      sum += lookup.mu(s.px + dx, s.py + dy);
    }
    total += 1.0 - sum / M;
  }
  return total;
}

RolloutResult rollout_cost(const ControlSequence& u_seq, const State2D& x0, double goal_x,
                           double goal_y, const TractionLookup& lookup, const MpcConfig& cfg,
                           Rng& rng) {
  const int N = int(u_seq.controls.size());
  RolloutResult res;
  res.states.reserve(N);

  double cost = 0.0;
  State2D x = x0;
  for (int i = 0; i < N; ++i) {
    // Stage cost on x_i (position-only reference).
    const Eigen::Vector3d err(x.px - goal_x, x.py - goal_y, 0.0);
    const ControlInput& u = u_seq.controls[i];
    const Eigen::Vector2d uv(u.v, u.omega);
    cost += err.dot(cfg.Q * err) + uv.dot(cfg.R * uv);

    const TractionParams p{lookup.mu(x.px, x.py), cfg.nu_bar};
    x = integrate_step(x, u, p.clamped(), cfg.dt);
    res.states.push_back(x);
  }
  const Eigen::Vector3d terr(x.px - goal_x, x.py - goal_y, 0.0);
  cost += terr.dot(cfg.Q_N * terr);
  cost += cfg.W * clearance_cost(res.states, lookup, cfg.clearance_samples,
                                 cfg.clearance_radius, rng);
  res.cost = cost;
  return res;
}

namespace {

ControlInput clamp_control(const ControlInput& u, const MpcConfig& cfg) {
  return {std::clamp(u.v, cfg.v_min, cfg.v_max),
          std::clamp(u.omega, -cfg.omega_max, cfg.omega_max)};
}

}  // namespace

MppiResult mppi_step(const State2D& x0, double goal_x, double goal_y,
                     const TractionLookup& lookup, const ControlSequence& warm_start,
                     const MppiConfig& mcfg, const MpcConfig& cfg, uint64_t seed) {
  const int N = int(warm_start.controls.size());
  const int K = mcfg.num_samples;
  if (N != cfg.N) throw std::invalid_argument("mppi_step: warm start length != horizon");
  if (K < 1) throw std::invalid_argument("mppi_step: need at least one sample");

  std::vector<ControlInput> samples(size_t(K) * N);
  std::vector<double> costs(K);

  auto eval_range = [&](int k0, int k1) {
    ControlSequence seq;
    seq.controls.resize(N);
    for (int k = k0; k < k1; ++k) {
      Rng rng = Rng::stream(seed, uint64_t(k));
      for (int i = 0; i < N; ++i) {
        ControlInput u = warm_start.controls[i];
        u.v += mcfg.sigma_v * rng.normal();
        u.omega += mcfg.sigma_omega * rng.normal();
        u = clamp_control(u, cfg);
        seq.controls[i] = u;
        samples[size_t(k) * N + i] = u;
      }
      costs[k] = rollout_cost(seq, x0, goal_x, goal_y, lookup, cfg, rng).cost;
    }
  };

  int n_threads = mcfg.threads > 0 ? mcfg.threads : int(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, K);
  if (n_threads == 1) {
    eval_range(0, K);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      const int k0 = K * t / n_threads;
      const int k1 = K * (t + 1) / n_threads;
      pool.emplace_back(eval_range, k0, k1);
    }
    for (auto& th : pool) th.join();
  }

  const double c_min = *std::min_element(costs.begin(), costs.end());
  double w_sum = 0.0;
  double c_sum = 0.0;
  std::vector<double> weights(K);
  for (int k = 0; k < K; ++k) {
    weights[k] = std::exp(-(costs[k] - c_min) / mcfg.lambda);
    w_sum += weights[k];
    c_sum += costs[k];
  }

  MppiResult out;
  out.min_cost = c_min;
  out.mean_cost = c_sum / K;
  out.output.controls.assign(N, ControlInput{});
  double entropy = 0.0;
  for (int k = 0; k < K; ++k) {
    const double w = weights[k] / w_sum;
    if (w > 0.0) entropy -= w * std::log(w);
    for (int i = 0; i < N; ++i) {
      out.output.controls[i].v += w * samples[size_t(k) * N + i].v;
      out.output.controls[i].omega += w * samples[size_t(k) * N + i].omega;
    }
  }
  for (ControlInput& u : out.output.controls) u = clamp_control(u, cfg);
  out.weight_entropy = entropy;
  out.applied = out.output.controls[0];

  out.next_warm.controls.assign(out.output.controls.begin() + 1, out.output.controls.end());
  out.next_warm.controls.push_back(out.output.controls.back());
  return out;
}

}  // namespace travnav
