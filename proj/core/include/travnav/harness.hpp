#ifndef TRAVNAV_HARNESS_HPP
#define TRAVNAV_HARNESS_HPP

#include <functional>
#include <string>
#include <vector>

#include "travnav/config.hpp"
#include "travnav/labeling.hpp"

namespace travnav {

enum class Outcome { kReached, kStuck, kTimeout };

std::string to_string(Outcome o);

struct EpisodeResult {
  Outcome outcome = Outcome::kTimeout;
  double path_length = 0.0;     // meters, true trajectory
  double elapsed = 0.0;         // simulated seconds
  double final_distance = 0.0;  // to goal, meters
  uint64_t seed = 0;
  ControllerKind controller = ControllerKind::kWayfast;
  std::vector<TrajectoryEntry> true_path;  // per control step, mu_label = true mu
};

/// Traversability predictor: image of predicted mu for the current view.
using Predictor = std::function<TraversabilityImage(const State2D& pose, Rng& rng)>;

/// wayfast: occlusion-aware oracle render of the true field.
/// blind: constant-1 image. geometric: LiDAR analog, 0 only where a patch
/// is taller than geom_height.
Predictor predictor_for(ControllerKind kind, const OracleRenderer& renderer,
                        const TractionField& field, const EpisodeSettings& ep);

/// Closed-loop navigation episode. If out_dir is non-empty, writes
/// trace.csv and summary.json there.
EpisodeResult run_episode(const FullConfig& cfg, uint64_t seed,
                          const std::string& out_dir = "");

struct BatchRow {
  ControllerKind controller;
  int total = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::vector<EpisodeResult> episodes;
};

/// Runs n_runs seeded episodes per controller kind; seeds are
/// base_seed..base_seed+n_runs-1. Writes results.csv when out_dir given.
std::vector<BatchRow> run_batch(const FullConfig& cfg, int n_runs,
                                const std::vector<ControllerKind>& controllers,
                                uint64_t base_seed, const std::string& out_dir = "",
                                int threads = 1);

struct CollectResult {
  TrajectoryLog log;                 // estimated poses with mu labels
  std::vector<double> frame_times;   // candidate frames, control rate
  std::vector<State2D> frame_poses;  // estimated pose at capture
};

/// Scripted noisy waypoint-driving run recording estimator traction
/// labels. If out_dir is non-empty, writes log.csv, frames.csv, a config
/// copy, and the projected label dataset under out_dir/dataset.
CollectResult collect_dataset(const FullConfig& cfg, double duration, uint64_t seed,
                              const std::string& out_dir = "");

/// Turns a recorded log into a sparse-label dataset (downsampled frames,
/// path ribbon projected into each frame).
std::vector<DatasetFrame> generate_dataset(const CollectResult& rec, const FullConfig& cfg);

/// Re-generates a dataset from a directory written by collect_dataset.
void labelgen_from_dir(const std::string& log_dir, const std::string& out_dir);

}  // namespace travnav

#endif  // TRAVNAV_HARNESS_HPP
