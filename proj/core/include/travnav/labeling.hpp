#ifndef TRAVNAV_LABELING_HPP
#define TRAVNAV_LABELING_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "travnav/camera.hpp"
#include "travnav/kinodynamics.hpp"

namespace travnav {

struct TrajectoryEntry {
  double t = 0.0;
  State2D pose;
  double mu_label = 1.0;
};

struct TrajectoryLog {
  std::vector<TrajectoryEntry> entries;
};

/// Sparse per-frame label image: values are defined where mask is set.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<uint8_t> mask;
  double source_frame_time = 0.0;

  size_t idx(int v, int u) const { return size_t(v) * width + u; }
};

/// Greedy frame selection: keep a frame iff at least 1/rate seconds have
/// elapsed since the last kept frame; the first frame is always kept.
std::vector<size_t> downsample_frames(std::span<const double> frame_times,
                                      double target_rate);

/// Projects the traversed path (a ribbon of track_width centered on the
/// trajectory) into the image space of the frame captured at frame_pose.
/// Overlapping segments resolve later-in-time wins. Only path within
/// max_ahead meters of the frame pose is labeled.
LabelImage project_path_labels(const State2D& frame_pose,
                               std::span<const TrajectoryEntry> future, double track_width,
                               const CameraConfig& cam, const GroundGrid& grid,
                               double max_ahead = 5.0);

LabelImage project_path_labels(const State2D& frame_pose,
                               std::span<const TrajectoryEntry> future, double track_width,
                               const CameraConfig& cam, double max_ahead = 5.0);

/// Label-distribution-smoothing weights: kernel-smoothed inverse density
/// over B bins of [0,1], normalized to mean 1 over occupied bins.
struct LdsWeighting {
  std::vector<double> bin_edges;          // B+1
  std::vector<double> effective_density;  // B
  std::vector<double> weight_per_bin;     // B

  double weight_for(double label) const;
};

LdsWeighting lds_weights(std::span<const double> labels, int bins, double sigma_bins);

/// Mean over masked pixels of weight(label) * |prediction - label|.
double sparse_l1_loss(const TraversabilityImage& prediction, const LabelImage& label,
                      const LdsWeighting& weights);

/// Dataset directory layout: per-frame label + mask PGM and a CSV index
/// (frame time, pose, file names).
struct DatasetFrame {
  double time = 0.0;
  State2D pose;
  LabelImage label;
};

void emit_dataset(const std::string& dir, std::span<const DatasetFrame> frames);

}  // namespace travnav

#endif  // TRAVNAV_LABELING_HPP
