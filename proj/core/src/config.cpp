#include "travnav/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace travnav {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config parse error at line " + std::to_string(lineno) +
                                 ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config parse error at line " + std::to_string(lineno) +
                               ": expected key = value");
    }
    cfg.data_[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = data_.find(section);
  if (it == data_.end()) return false;
  for (const auto& [k, v] : it->second) {
    if (k == key) return true;
  }
  return false;
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key,
                                const std::string& fallback) const {
  const auto it = data_.find(section);
  if (it == data_.end()) return fallback;
  for (auto rit = it->second.rbegin(); rit != it->second.rend(); ++rit) {
    if (rit->first == key) return rit->second;
  }
  return fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const std::string s = get_str(section, key, "");
  if (s.empty()) return fallback;
  size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (trim(s.substr(pos)).size()) {
    throw std::runtime_error("config value is not a number: " + section + "." + key);
  }
  return v;
}

int ConfigFile::get_int(const std::string& section, const std::string& key,
                        int fallback) const {
  const std::string s = get_str(section, key, "");
  if (s.empty()) return fallback;
  return std::stoi(s);
}

std::vector<std::string> ConfigFile::get_all(const std::string& section,
                                             const std::string& key) const {
  std::vector<std::string> out;
  const auto it = data_.find(section);
  if (it == data_.end()) return out;
  for (const auto& [k, v] : it->second) {
    if (k == key) out.push_back(v);
  }
  return out;
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  std::istringstream ss(get_str(section, key, ""));
  double v;
  while (ss >> v) out.push_back(v);
  return out;
}

ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "wayfast") return ControllerKind::kWayfast;
  if (s == "blind") return ControllerKind::kBlind;
  if (s == "geometric") return ControllerKind::kGeometric;
  throw std::runtime_error("unknown controller kind: " + s);
}

std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::kWayfast: return "wayfast";
    case ControllerKind::kBlind: return "blind";
    case ControllerKind::kGeometric: return "geometric";
  }
  return "?";
}

namespace {

Eigen::Matrix3d diag3(const ConfigFile& cfg, const std::string& section,
                      const std::string& key, const Eigen::Matrix3d& fallback) {
  const auto v = cfg.get_doubles(section, key);
  if (v.empty()) return fallback;
  if (v.size() != 3) {
    throw std::runtime_error("expected 3 diagonal entries for " + section + "." + key);
  }
  return Eigen::Vector3d(v[0], v[1], v[2]).asDiagonal();
}

}  // namespace

FullConfig full_config_from(const ConfigFile& cfg) {
  FullConfig fc;

  fc.world.base_mu = cfg.get_double("world", "base_mu", fc.world.base_mu);
  fc.world.base_nu = cfg.get_double("world", "base_nu", fc.world.base_nu);
  for (const std::string& line : cfg.get_all("world", "patch")) {
    std::istringstream ss(line);
    Patch p;
    if (!(ss >> p.cx >> p.cy >> p.radius >> p.mu >> p.height)) {
      throw std::runtime_error("patch needs 5 numbers (cx cy radius mu height): " + line);
    }
    if (p.radius <= 0.0) throw std::runtime_error("patch radius must be positive");
    fc.world.patches.push_back(p);
  }

  fc.process.pos_sigma = cfg.get_double("world", "process_pos_sigma", fc.process.pos_sigma);
  fc.process.theta_sigma =
      cfg.get_double("world", "process_theta_sigma", fc.process.theta_sigma);
  fc.sensors.gnss_sigma = cfg.get_double("world", "gnss_sigma", fc.sensors.gnss_sigma);
  fc.sensors.compass_sigma =
      cfg.get_double("world", "compass_sigma", fc.sensors.compass_sigma);
  fc.sensors.gyro_sigma = cfg.get_double("world", "gyro_sigma", fc.sensors.gyro_sigma);
  fc.sensors.delta_theta_true =
      cfg.get_double("world", "delta_theta_true", fc.sensors.delta_theta_true);

  const int cam_w = cfg.get_int("camera", "width", 424);
  const int cam_h = cfg.get_int("camera", "height", 240);
  const double hfov = cfg.get_double("camera", "hfov_deg", 69.0) * kPi / 180.0;
  const double vfov = cfg.get_double("camera", "vfov_deg", 84.0) * kPi / 180.0;
  fc.camera.intrinsics = CameraIntrinsics::from_fov(cam_w, cam_h, hfov, vfov);
  if (cfg.has("camera", "fx")) fc.camera.intrinsics.fx = cfg.get_double("camera", "fx", 0);
  if (cfg.has("camera", "fy")) fc.camera.intrinsics.fy = cfg.get_double("camera", "fy", 0);
  if (cfg.has("camera", "cx")) fc.camera.intrinsics.cx = cfg.get_double("camera", "cx", 0);
  if (cfg.has("camera", "cy")) fc.camera.intrinsics.cy = cfg.get_double("camera", "cy", 0);
  fc.camera.extrinsics.height_above_ground =
      cfg.get_double("camera", "height_above_ground", 1.0);
  fc.camera.extrinsics.pitch_down =
      cfg.get_double("camera", "pitch_down_deg", 50.0) * kPi / 180.0;
  fc.camera.extrinsics.forward_offset = cfg.get_double("camera", "forward_offset", 0.0);
  fc.camera.max_range = cfg.get_double("camera", "max_range", 5.0);
  fc.camera.block_height = cfg.get_double("camera", "block_height", 0.15);

  fc.nmhe.N = cfg.get_int("nmhe", "N", fc.nmhe.N);
  fc.nmhe.P_x = diag3(cfg, "nmhe", "P_x", fc.nmhe.P_x);
  fc.nmhe.P_p = diag3(cfg, "nmhe", "P_p", fc.nmhe.P_p);
  fc.nmhe.P_w = diag3(cfg, "nmhe", "P_w", fc.nmhe.P_w);
  fc.nmhe.max_iters = cfg.get_int("nmhe", "max_iters", fc.nmhe.max_iters);
  fc.nmhe.convergence_tol =
      cfg.get_double("nmhe", "convergence_tol", fc.nmhe.convergence_tol);
  fc.nmhe_priors.mu = cfg.get_double("nmhe", "prior_mu", fc.nmhe_priors.mu);
  fc.nmhe_priors.nu = cfg.get_double("nmhe", "prior_nu", fc.nmhe_priors.nu);
  fc.nmhe_priors.delta_theta =
      cfg.get_double("nmhe", "prior_delta_theta", fc.nmhe_priors.delta_theta);

  fc.ekf.Q = diag3(cfg, "ekf", "Q", fc.ekf.Q);
  fc.ekf.R = diag3(cfg, "ekf", "R", fc.ekf.R);

  fc.mpc.N = cfg.get_int("mpc", "N", fc.mpc.N);
  fc.mpc.dt = cfg.get_double("mpc", "dt", fc.mpc.dt);
  fc.mpc.Q = diag3(cfg, "mpc", "Q", fc.mpc.Q);
  fc.mpc.Q_N = diag3(cfg, "mpc", "Q_N", fc.mpc.Q_N);
  {
    const auto r = cfg.get_doubles("mpc", "R");
    if (r.size() == 2) fc.mpc.R = Eigen::Vector2d(r[0], r[1]).asDiagonal();
  }
  fc.mpc.W = cfg.get_double("mpc", "W", fc.mpc.W);
  fc.mpc.clearance_samples = cfg.get_int("mpc", "clearance_samples", fc.mpc.clearance_samples);
  fc.mpc.clearance_radius =
      cfg.get_double("mpc", "clearance_radius", fc.mpc.clearance_radius);
  fc.mpc.nu_bar = cfg.get_double("mpc", "nu_bar", fc.mpc.nu_bar);
  fc.mpc.v_min = cfg.get_double("mpc", "v_min", fc.mpc.v_min);
  fc.mpc.v_max = cfg.get_double("mpc", "v_max", fc.mpc.v_max);
  fc.mpc.omega_max = cfg.get_double("mpc", "omega_max", fc.mpc.omega_max);

  fc.mppi.num_samples = cfg.get_int("mppi", "num_samples", fc.mppi.num_samples);
  fc.mppi.lambda = cfg.get_double("mppi", "lambda", fc.mppi.lambda);
  fc.mppi.sigma_v = cfg.get_double("mppi", "sigma_v", fc.mppi.sigma_v);
  fc.mppi.sigma_omega = cfg.get_double("mppi", "sigma_omega", fc.mppi.sigma_omega);
  fc.mppi.threads = cfg.get_int("mppi", "threads", fc.mppi.threads);

  fc.rates.control_rate = cfg.get_double("rates", "control_rate", fc.rates.control_rate);
  fc.rates.sim_rate = cfg.get_double("rates", "sim_rate", fc.rates.sim_rate);

  EpisodeSettings& ep = fc.episode;
  {
    const auto start = cfg.get_doubles("episode", "start");
    if (start.size() == 3) ep.start = State2D{start[0], start[1], wrap_angle(start[2])};
    const auto goal = cfg.get_doubles("episode", "goal");
    if (goal.size() == 2) {
      ep.goal_x = goal[0];
      ep.goal_y = goal[1];
    }
  }
  ep.goal_radius = cfg.get_double("episode", "goal_radius", ep.goal_radius);
  ep.time_budget = cfg.get_double("episode", "time_budget", ep.time_budget);
  ep.controller =
      controller_kind_from_string(cfg.get_str("episode", "controller", "wayfast"));
  ep.seed = uint64_t(cfg.get_int("episode", "seed", 0));
  ep.geom_height = cfg.get_double("episode", "geom_height", ep.geom_height);
  ep.oracle_noise_sigma =
      cfg.get_double("episode", "oracle_noise_sigma", ep.oracle_noise_sigma);
  ep.stuck_window = cfg.get_double("episode", "stuck_window", ep.stuck_window);
  ep.stuck_displacement =
      cfg.get_double("episode", "stuck_displacement", ep.stuck_displacement);
  ep.turn_engage_bearing =
      cfg.get_double("episode", "turn_engage_bearing", ep.turn_engage_bearing);
  ep.turn_disengage_bearing =
      cfg.get_double("episode", "turn_disengage_bearing", ep.turn_disengage_bearing);
  ep.turn_gain = cfg.get_double("episode", "turn_gain", ep.turn_gain);

  CollectSettings& co = fc.collect;
  {
    const auto box = cfg.get_doubles("collect", "waypoint_box");
    if (box.size() == 4) {
      co.x_min = box[0];
      co.x_max = box[1];
      co.y_min = box[2];
      co.y_max = box[3];
    }
  }
  co.waypoint_radius = cfg.get_double("collect", "waypoint_radius", co.waypoint_radius);
  co.v_nominal = cfg.get_double("collect", "v_nominal", co.v_nominal);
  co.steer_gain = cfg.get_double("collect", "steer_gain", co.steer_gain);
  co.v_noise = cfg.get_double("collect", "v_noise", co.v_noise);
  co.omega_noise = cfg.get_double("collect", "omega_noise", co.omega_noise);
  co.frame_rate = cfg.get_double("collect", "frame_rate", co.frame_rate);
  co.track_width = cfg.get_double("collect", "track_width", co.track_width);
  co.label_max_ahead = cfg.get_double("collect", "label_max_ahead", co.label_max_ahead);

  return fc;
}

FullConfig load_full_config(const std::string& path) {
  return full_config_from(ConfigFile::load(path));
}

}  // namespace travnav
