#ifndef TRAVNAV_CONFIG_HPP
#define TRAVNAV_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "travnav/camera.hpp"
#include "travnav/control.hpp"
#include "travnav/estimation.hpp"
#include "travnav/world.hpp"

namespace travnav {

/// Plain-text config: `[section]` headers, `key = value` lines, `#`
/// comments. Repeated keys (e.g. world patches) keep every occurrence.
class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile parse(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  /// All values recorded for a repeated key, in file order.
  std::vector<std::string> get_all(const std::string& section, const std::string& key) const;
  /// Whitespace-separated numbers from one value string.
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

 private:
  // section -> ordered (key, value) pairs
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> data_;
};

struct SimRates {
  double control_rate = 10.0;  // Hz: control, GNSS, NMHE
  double sim_rate = 100.0;     // Hz: plant integration, gyro, EKF predict
};

enum class ControllerKind { kWayfast, kBlind, kGeometric };

ControllerKind controller_kind_from_string(const std::string& s);
std::string to_string(ControllerKind k);

struct EpisodeSettings {
  State2D start;
  double goal_x = 5.0;
  double goal_y = 0.0;
  double goal_radius = 0.5;
  double time_budget = 90.0;
  ControllerKind controller = ControllerKind::kWayfast;
  uint64_t seed = 0;
  double geom_height = 0.15;        // geometric-baseline obstacle threshold
  double oracle_noise_sigma = 0.0;  // noise on the oracle predictor image
  double stuck_window = 5.0;        // s
  double stuck_displacement = 0.05; // m
  // Point-turn bootstrap: rotate toward the goal when its bearing is
  // outside the camera's view (MPPI cannot see paths it cannot look at).
  double turn_engage_bearing = 0.5;     // rad
  double turn_disengage_bearing = 0.15; // rad
  double turn_gain = 1.5;
};

struct CollectSettings {
  double x_min = 0.0, x_max = 20.0, y_min = -8.0, y_max = 8.0;  // waypoint box
  double waypoint_radius = 0.8;
  double v_nominal = 0.8;
  double steer_gain = 1.5;
  double v_noise = 0.1;
  double omega_noise = 0.3;
  double frame_rate = 2.0;     // fps after downsampling
  double track_width = 0.4;    // ribbon width for label projection
  double label_max_ahead = 5.0;
};

struct EkfConfig {
  Eigen::Matrix3d Q = Eigen::Vector3d(1e-4, 1e-4, 1e-5).asDiagonal();
  Eigen::Matrix3d R = Eigen::Vector3d(0.01, 0.01, 0.0025).asDiagonal();
};

struct FullConfig {
  TractionField world;
  ProcessNoise process;
  SensorNoise sensors;
  CameraConfig camera;
  NmheConfig nmhe;
  NmhePriors nmhe_priors;
  EkfConfig ekf;
  MpcConfig mpc;
  MppiConfig mppi;
  SimRates rates;
  EpisodeSettings episode;
  CollectSettings collect;
};

/// Defaults overlaid with whatever the file specifies.
FullConfig load_full_config(const std::string& path);
FullConfig full_config_from(const ConfigFile& cfg);

}  // namespace travnav

#endif  // TRAVNAV_CONFIG_HPP
