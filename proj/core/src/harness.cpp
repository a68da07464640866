#include "travnav/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace travnav {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kReached: return "reached";
    case Outcome::kStuck: return "stuck";
    case Outcome::kTimeout: return "timeout";
  }
  return "?";
}

Predictor predictor_for(ControllerKind kind, const OracleRenderer& renderer,
                        const TractionField& field, const EpisodeSettings& ep) {
  switch (kind) {
    case ControllerKind::kWayfast:
      return [&renderer, &field, sigma = ep.oracle_noise_sigma](const State2D& pose,
                                                                Rng& rng) {
        return renderer.render(pose, field, sigma, &rng, OracleRenderer::Mode::kOracle);
      };
    case ControllerKind::kBlind:
      return [&renderer](const State2D& pose, Rng&) {
        TraversabilityImage img;
        img.width = renderer.camera().intrinsics.width;
        img.height = renderer.camera().intrinsics.height;
        img.grid.assign(size_t(img.width) * img.height, 1.0f);
        img.frame_pose = pose;
        return img;
      };
    case ControllerKind::kGeometric:
      return [&renderer, &field, h = ep.geom_height](const State2D& pose, Rng& rng) {
        return renderer.render(pose, field, 0.0, &rng, OracleRenderer::Mode::kGeometric, h);
      };
  }
  throw std::runtime_error("predictor_for: unknown controller kind");
}

namespace {

struct TraceWriter {
  std::ofstream out;

  explicit TraceWriter(const std::string& path) : out(path) {
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "step,t,true_px,true_py,true_theta,est_px,est_py,est_theta,"
           "cov_xx,cov_yy,cov_tt,nmhe_mu,nmhe_nu,nmhe_dtheta,nmhe_cost,nmhe_converged,"
           "cmd_v,cmd_omega,mppi_min_cost,mppi_mean_cost,mppi_entropy\n";
  }

  void row(int step, double t, const State2D& truth, const EkfState& ekf,
           const NmheSolution* sol, const ControlInput& u, double mppi_min, double mppi_mean,
           double mppi_entropy) {
    char buf[640];
    std::snprintf(buf, sizeof(buf),
                  "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  step, t, truth.px, truth.py, truth.theta, ekf.mean.px, ekf.mean.py,
                  ekf.mean.theta, ekf.cov(0, 0), ekf.cov(1, 1), ekf.cov(2, 2),
                  sol ? sol->mu : -1.0, sol ? sol->nu : -1.0, sol ? sol->delta_theta : 0.0,
                  sol ? sol->final_cost : -1.0, sol ? int(sol->converged) : 0, u.v, u.omega,
                  mppi_min, mppi_mean, mppi_entropy);
    out << buf;
  }
};

double dist2d(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace

EpisodeResult run_episode(const FullConfig& cfg, uint64_t seed, const std::string& out_dir) {
  const EpisodeSettings& ep = cfg.episode;
  if (ep.goal_radius <= 0.0) throw std::runtime_error("goal_radius must be positive");
  if (ep.time_budget <= 0.0) throw std::runtime_error("time_budget must be positive");

  const double dt_sim = 1.0 / cfg.rates.sim_rate;
  const int substeps = std::max(1, int(std::lround(cfg.rates.sim_rate / cfg.rates.control_rate)));
  const double dt_ctl = dt_sim * substeps;

  const OracleRenderer renderer(cfg.camera);
  const Predictor predictor = predictor_for(ep.controller, renderer, cfg.world, ep);

  Rng rng_process = Rng::stream(seed, 1);
  Rng rng_sensor = Rng::stream(seed, 2);
  Rng rng_render = Rng::stream(seed, 3);

  MpcConfig mpc = cfg.mpc;
  mpc.dt = std::max(mpc.dt, dt_ctl);  // never plan finer than the control period

  MeasurementWindow window(cfg.nmhe.N, dt_ctl);
  NmhePriors priors = cfg.nmhe_priors;
  std::optional<NmheDecision> nmhe_guess;
  EkfState ekf;
  bool ekf_init = false;
  double mu_est = priors.mu;

  ControlSequence warm;
  warm.controls.assign(mpc.N, ControlInput{});

  std::optional<TraceWriter> trace;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    trace.emplace(out_dir + "/trace.csv");
  }

  EpisodeResult res;
  res.seed = seed;
  res.controller = ep.controller;

  State2D truth = ep.start;
  ControlInput applied{};
  bool turning = false;
  double path_length = 0.0;
  std::deque<std::pair<double, State2D>> history;

  const int max_steps = int(std::ceil(ep.time_budget / dt_ctl));
  double t = 0.0;

  for (int step = 0;; ++step) {
    t = step * dt_ctl;
    const TractionParams true_p = cfg.world.traction_at(truth.px, truth.py);
    const auto [z, gyro_ctl] =
        sample_sensors(truth, true_p.nu * applied.omega, cfg.sensors, t, rng_sensor);
    (void)gyro_ctl;  // the EKF consumes the high-rate gyro below

    if (!ekf_init) {
      ekf.mean = State2D{z.z_x, z.z_y, wrap_angle(z.z_theta + priors.delta_theta)};
      ekf.cov = Eigen::Vector3d(1.0, 1.0, 0.25).asDiagonal();
      priors.state = ekf.mean;
      ekf_init = true;
    }

    // Perceive and decide.
    const TraversabilityImage img = predictor(truth, rng_render);
    const TractionLookup lookup(img, cfg.camera);

    const double bearing =
        wrap_angle(std::atan2(ep.goal_y - ekf.mean.py, ep.goal_x - ekf.mean.px) -
                   ekf.mean.theta);
    ControlInput u{};
    double mppi_min = 0.0, mppi_mean = 0.0, mppi_entropy = 0.0;
    const double engage = turning ? ep.turn_disengage_bearing : ep.turn_engage_bearing;
    if (std::abs(bearing) > engage) {
      // Point-turn toward the goal: the FOV-confined planner cannot reach
      // states it cannot see, so bring the goal into view first.
      turning = true;
      u.v = 0.0;
      u.omega = std::clamp(ep.turn_gain * bearing, -mpc.omega_max, mpc.omega_max);
      std::fill(warm.controls.begin(), warm.controls.end(), ControlInput{});
    } else {
      turning = false;
      const uint64_t step_seed = seed * 0x9e3779b97f4a7c15ULL + 1000003ULL * (step + 1);
      const MppiResult mp =
          mppi_step(ekf.mean, ep.goal_x, ep.goal_y, lookup, warm, cfg.mppi, mpc, step_seed);
      u = mp.applied;
      warm = mp.next_warm;
      mppi_min = mp.min_cost;
      mppi_mean = mp.mean_cost;
      mppi_entropy = mp.weight_entropy;
    }

    // Estimate.
    window.push(z, u);
    std::optional<NmheSolution> sol;
    if (window.full()) {
      sol = nmhe_solve(window, priors, cfg.nmhe, nmhe_guess);
      mu_est = sol->mu;
      ekf = ekf_update(ekf, sol->states.back(), cfg.ekf.R);
      priors.state = sol->states[1];
      priors.mu = sol->mu;
      priors.nu = sol->nu;
      priors.delta_theta = sol->delta_theta;
      NmheDecision g;
      g << sol->states[1].px, sol->states[1].py, sol->states[1].theta, sol->mu, sol->nu,
          sol->delta_theta;
      nmhe_guess = g;
    }

    if (trace) {
      trace->row(step, t, truth, ekf, sol ? &*sol : nullptr, u, mppi_min, mppi_mean,
                 mppi_entropy);
    }
    res.true_path.push_back({t, truth, true_p.mu});

    // Termination checks on the true state.
    const double dist_goal = dist2d(truth.px, truth.py, ep.goal_x, ep.goal_y);
    if (dist_goal <= ep.goal_radius) {
      res.outcome = Outcome::kReached;
      break;
    }
    history.emplace_back(t, truth);
    while (history.size() >= 2 && history[1].first <= t - ep.stuck_window) {
      history.pop_front();
    }
    if (history.front().first <= t - ep.stuck_window &&
        dist2d(history.front().second.px, history.front().second.py, truth.px, truth.py) <
            ep.stuck_displacement) {
      res.outcome = Outcome::kStuck;
      break;
    }
    if (step >= max_steps) {
      res.outcome = Outcome::kTimeout;
      break;
    }

    // Simulate to the next control step; EKF tracks the high-rate gyro.
    for (int j = 0; j < substeps; ++j) {
      const State2D prev = truth;
      truth = sim_step(truth, u, cfg.world, cfg.process, dt_sim, rng_process);
      path_length += dist2d(prev.px, prev.py, truth.px, truth.py);
      const double nu_now = cfg.world.traction_at(truth.px, truth.py).nu;
      const double gyro = nu_now * u.omega + (cfg.sensors.gyro_sigma > 0.0
                                                  ? rng_sensor.normal(0.0, cfg.sensors.gyro_sigma)
                                                  : 0.0);
      ekf = ekf_predict(ekf, gyro, u.v, mu_est, cfg.ekf.Q, dt_sim);
    }
    applied = u;
  }

  res.path_length = path_length;
  res.elapsed = t;
  res.final_distance = dist2d(truth.px, truth.py, ep.goal_x, ep.goal_y);

  if (!out_dir.empty()) {
    nlohmann::ordered_json j;
    j["controller"] = to_string(ep.controller);
    j["seed"] = seed;
    j["outcome"] = to_string(res.outcome);
    j["path_length"] = res.path_length;
    j["elapsed"] = res.elapsed;
    j["final_distance"] = res.final_distance;
    std::ofstream out(out_dir + "/summary.json");
    out << j.dump(2) << "\n";
  }
  return res;
}

std::vector<BatchRow> run_batch(const FullConfig& cfg, int n_runs,
                                const std::vector<ControllerKind>& controllers,
                                uint64_t base_seed, const std::string& out_dir, int threads) {
  if (n_runs < 1) throw std::invalid_argument("run_batch: n_runs must be >= 1");

  struct Job {
    ControllerKind kind;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (ControllerKind k : controllers) {
    for (int r = 0; r < n_runs; ++r) jobs.push_back({k, base_seed + uint64_t(r)});
  }
  std::vector<EpisodeResult> results(jobs.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      FullConfig c = cfg;
      c.episode.controller = jobs[i].kind;
      results[i] = run_episode(c, jobs[i].seed);
    }
  };
  const int n_threads = std::clamp(threads > 0 ? threads : int(std::thread::hardware_concurrency()),
                                   1, int(jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<BatchRow> table;
  size_t idx = 0;
  for (ControllerKind k : controllers) {
    BatchRow row;
    row.controller = k;
    for (int r = 0; r < n_runs; ++r, ++idx) {
      row.episodes.push_back(results[idx]);
      ++row.total;
      if (results[idx].outcome == Outcome::kReached) ++row.successes;
    }
    row.success_rate = double(row.successes) / row.total;
    table.push_back(std::move(row));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream res_csv(out_dir + "/results.csv");
    res_csv << "controller,total_tries,successful_runs,success_rate\n";
    char buf[128];
    for (const BatchRow& row : table) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.9g\n", to_string(row.controller).c_str(),
                    row.total, row.successes, row.success_rate);
      res_csv << buf;
    }
    std::ofstream ep_csv(out_dir + "/episodes.csv");
    ep_csv << "controller,seed,outcome,path_length,elapsed,final_distance\n";
    for (const BatchRow& row : table) {
      for (const EpisodeResult& e : row.episodes) {
        std::snprintf(buf, sizeof(buf), "%s,%llu,%s,%.9g,%.9g,%.9g\n",
                      to_string(e.controller).c_str(), (unsigned long long)e.seed,
                      to_string(e.outcome).c_str(), e.path_length, e.elapsed,
                      e.final_distance);
        ep_csv << buf;
      }
    }
  }
  return table;
}

CollectResult collect_dataset(const FullConfig& cfg, double duration, uint64_t seed,
                              const std::string& out_dir) {
  if (duration <= 0.0) throw std::invalid_argument("collect_dataset: duration must be > 0");

  const CollectSettings& co = cfg.collect;
  const double dt_sim = 1.0 / cfg.rates.sim_rate;
  const int substeps = std::max(1, int(std::lround(cfg.rates.sim_rate / cfg.rates.control_rate)));
  const double dt_ctl = dt_sim * substeps;

  Rng rng_process = Rng::stream(seed, 1);
  Rng rng_sensor = Rng::stream(seed, 2);
  Rng rng_driver = Rng::stream(seed, 4);

  MeasurementWindow window(cfg.nmhe.N, dt_ctl);
  NmhePriors priors = cfg.nmhe_priors;
  std::optional<NmheDecision> nmhe_guess;
  EkfState ekf;
  bool ekf_init = false;
  double mu_est = priors.mu;

  CollectResult rec;
  State2D truth = cfg.episode.start;
  ControlInput applied{};

  auto next_waypoint = [&] {
    return std::pair<double, double>{rng_driver.uniform(co.x_min, co.x_max),
                                     rng_driver.uniform(co.y_min, co.y_max)};
  };
  auto [wx, wy] = next_waypoint();

  const int steps = int(std::ceil(duration / dt_ctl));
  for (int step = 0; step <= steps; ++step) {
    const double t = step * dt_ctl;
    const TractionParams true_p = cfg.world.traction_at(truth.px, truth.py);
    const auto [z, gyro_ctl] =
        sample_sensors(truth, true_p.nu * applied.omega, cfg.sensors, t, rng_sensor);
    (void)gyro_ctl;
    if (!ekf_init) {
      ekf.mean = State2D{z.z_x, z.z_y, wrap_angle(z.z_theta + priors.delta_theta)};
      ekf.cov = Eigen::Vector3d(1.0, 1.0, 0.25).asDiagonal();
      priors.state = ekf.mean;
      ekf_init = true;
    }

    if (dist2d(ekf.mean.px, ekf.mean.py, wx, wy) < co.waypoint_radius) {
      std::tie(wx, wy) = next_waypoint();
    }
    const double bearing =
        wrap_angle(std::atan2(wy - ekf.mean.py, wx - ekf.mean.px) - ekf.mean.theta);
    ControlInput u;
    u.omega = std::clamp(co.steer_gain * bearing + rng_driver.normal(0.0, co.omega_noise),
                         -cfg.mpc.omega_max, cfg.mpc.omega_max);
    u.v = std::clamp(co.v_nominal * std::max(0.0, std::cos(bearing)) +
                         rng_driver.normal(0.0, co.v_noise),
                     0.0, cfg.mpc.v_max);

    window.push(z, u);
    if (window.full()) {
      const NmheSolution sol = nmhe_solve(window, priors, cfg.nmhe, nmhe_guess);
      mu_est = sol.mu;
      ekf = ekf_update(ekf, sol.states.back(), cfg.ekf.R);
      priors.state = sol.states[1];
      priors.mu = sol.mu;
      priors.nu = sol.nu;
      priors.delta_theta = sol.delta_theta;
      NmheDecision g;
      g << sol.states[1].px, sol.states[1].py, sol.states[1].theta, sol.mu, sol.nu,
          sol.delta_theta;
      nmhe_guess = g;
      rec.log.entries.push_back({t, sol.states.back(), sol.mu});
    }

    rec.frame_times.push_back(t);
    rec.frame_poses.push_back(ekf.mean);

    for (int j = 0; j < substeps; ++j) {
      truth = sim_step(truth, u, cfg.world, cfg.process, dt_sim, rng_process);
      const double nu_now = cfg.world.traction_at(truth.px, truth.py).nu;
      const double gyro = nu_now * u.omega + (cfg.sensors.gyro_sigma > 0.0
                                                  ? rng_sensor.normal(0.0, cfg.sensors.gyro_sigma)
                                                  : 0.0);
      ekf = ekf_predict(ekf, gyro, u.v, mu_est, cfg.ekf.Q, dt_sim);
    }
    applied = u;
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    char buf[256];
    std::ofstream log_csv(out_dir + "/log.csv");
    log_csv << "t,px,py,theta,mu\n";
    for (const TrajectoryEntry& e : rec.log.entries) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g\n", e.t, e.pose.px, e.pose.py,
                    e.pose.theta, e.mu_label);
      log_csv << buf;
    }
    std::ofstream frames_csv(out_dir + "/frames.csv");
    frames_csv << "t,px,py,theta\n";
    for (size_t i = 0; i < rec.frame_times.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", rec.frame_times[i],
                    rec.frame_poses[i].px, rec.frame_poses[i].py, rec.frame_poses[i].theta);
      frames_csv << buf;
    }
    const auto frames = generate_dataset(rec, cfg);
    emit_dataset(out_dir + "/dataset", frames);
  }
  return rec;
}

std::vector<DatasetFrame> generate_dataset(const CollectResult& rec, const FullConfig& cfg) {
  const GroundGrid grid(cfg.camera);
  const auto kept = downsample_frames(rec.frame_times, cfg.collect.frame_rate);

  std::vector<DatasetFrame> frames;
  frames.reserve(kept.size());
  for (size_t i : kept) {
    const double t0 = rec.frame_times[i];
    const State2D& pose = rec.frame_poses[i];
    const auto lo = std::lower_bound(
        rec.log.entries.begin(), rec.log.entries.end(), t0,
        [](const TrajectoryEntry& e, double t) { return e.t < t; });
    const auto future =
        std::span<const TrajectoryEntry>(rec.log.entries)
            .subspan(size_t(lo - rec.log.entries.begin()));
    DatasetFrame f;
    f.time = t0;
    f.pose = pose;
    f.label = project_path_labels(pose, future, cfg.collect.track_width, cfg.camera, grid,
                                  cfg.collect.label_max_ahead);
    f.label.source_frame_time = t0;
    frames.push_back(std::move(f));
  }
  return frames;
}

namespace {

std::vector<double> parse_csv_line(const std::string& line) {
  std::vector<double> out;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

void labelgen_from_dir(const std::string& log_dir, const std::string& out_dir) {
  const FullConfig cfg = load_full_config(log_dir + "/config.cfg");

  CollectResult rec;
  {
    std::ifstream in(log_dir + "/log.csv");
    if (!in) throw std::runtime_error("cannot open " + log_dir + "/log.csv");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto v = parse_csv_line(line);
      rec.log.entries.push_back({v[0], State2D{v[1], v[2], v[3]}, v[4]});
    }
  }
  {
    std::ifstream in(log_dir + "/frames.csv");
    if (!in) throw std::runtime_error("cannot open " + log_dir + "/frames.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto v = parse_csv_line(line);
      rec.frame_times.push_back(v[0]);
      rec.frame_poses.push_back(State2D{v[1], v[2], v[3]});
    }
  }

  const auto frames = generate_dataset(rec, cfg);
  emit_dataset(out_dir, frames);
}

}  // namespace travnav
