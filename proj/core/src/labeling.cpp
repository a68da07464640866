#include "travnav/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace travnav {

std::vector<size_t> downsample_frames(std::span<const double> frame_times,
                                      double target_rate) {
  std::vector<size_t> kept;
  if (frame_times.empty()) return kept;
  if (target_rate <= 0.0) throw std::invalid_argument("downsample_frames: rate must be > 0");
  const double min_gap = 1.0 / target_rate - 1e-9;
  kept.push_back(0);
  double last = frame_times[0];
  for (size_t i = 1; i < frame_times.size(); ++i) {
    if (frame_times[i] - last >= min_gap) {
      kept.push_back(i);
      last = frame_times[i];
    }
  }
  return kept;
}

LabelImage project_path_labels(const State2D& frame_pose,
                               std::span<const TrajectoryEntry> future, double track_width,
                               const CameraConfig& cam, const GroundGrid& grid,
                               double max_ahead) {
  LabelImage out;
  out.width = cam.intrinsics.width;
  out.height = cam.intrinsics.height;
  out.values.assign(size_t(out.width) * out.height, 0.0f);
  out.mask.assign(size_t(out.width) * out.height, 0);
  if (future.size() < 2) return out;

  const double half_w = 0.5 * track_width;
  const double c = std::cos(frame_pose.theta), s = std::sin(frame_pose.theta);

  for (size_t i = 0; i + 1 < future.size(); ++i) {
    const State2D& a = future[i].pose;
    const State2D& b = future[i + 1].pose;
    const double da = std::hypot(a.px - frame_pose.px, a.py - frame_pose.py);
    const double db = std::hypot(b.px - frame_pose.px, b.py - frame_pose.py);
    if (da > max_ahead && db > max_ahead) continue;

    const double dx = b.px - a.px, dy = b.py - a.py;
    const double len = std::hypot(dx, dy);
    if (len < 1e-9) continue;
    const double ux = dx / len, uy = dy / len;  // along-track
    const double nx = -uy, ny = ux;             // left normal

    // Bounding box in the image from the projected rectangle corners.
    double u_min = 1e30, u_max = -1e30, v_min = 1e30, v_max = -1e30;
    bool any = false;
    const double corners[6][2] = {
        {a.px + half_w * nx, a.py + half_w * ny}, {a.px - half_w * nx, a.py - half_w * ny},
        {b.px + half_w * nx, b.py + half_w * ny}, {b.px - half_w * nx, b.py - half_w * ny},
        {a.px, a.py},                             {b.px, b.py}};
    for (const auto& cpt : corners) {
      const auto px = project_ground_point(cpt[0], cpt[1], frame_pose, cam);
      if (!px) continue;
      u_min = std::min(u_min, px->u);
      u_max = std::max(u_max, px->u);
      v_min = std::min(v_min, px->v);
      v_max = std::max(v_max, px->v);
      any = true;
    }
    if (!any) continue;
    const int u0 = std::max(0, int(std::floor(u_min)) - 2);
    const int u1 = std::min(out.width - 1, int(std::ceil(u_max)) + 2);
    const int v0 = std::max(0, int(std::floor(v_min)) - 2);
    const int v1 = std::min(out.height - 1, int(std::ceil(v_max)) + 2);

    const float label = float(future[i + 1].mu_label);
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const GroundGrid::Cell& cell = grid.cell(v, u);
        if (!cell.valid) continue;
        // Pixel ground point in the world frame.
        const double wx = frame_pose.px + c * cell.gx - s * cell.gy;
        const double wy = frame_pose.py + s * cell.gx + c * cell.gy;
        const double px_a = wx - a.px, py_a = wy - a.py;
        const double t = px_a * ux + py_a * uy;
        if (t < 0.0 || t > len) continue;
        if (std::abs(px_a * nx + py_a * ny) > half_w) continue;
        out.values[out.idx(v, u)] = label;
        out.mask[out.idx(v, u)] = 1;
      }
    }
  }
  return out;
}

LabelImage project_path_labels(const State2D& frame_pose,
                               std::span<const TrajectoryEntry> future, double track_width,
                               const CameraConfig& cam, double max_ahead) {
  const GroundGrid grid(cam);
  return project_path_labels(frame_pose, future, track_width, cam, grid, max_ahead);
}

double LdsWeighting::weight_for(double label) const {
  const int B = int(weight_per_bin.size());
  const int b = std::clamp(int(label * B), 0, B - 1);
  return weight_per_bin[b];
}

LdsWeighting lds_weights(std::span<const double> labels, int bins, double sigma_bins) {
  if (bins < 2) throw std::invalid_argument("lds_weights: need at least 2 bins");
  if (labels.empty()) throw std::invalid_argument("lds_weights: empty label set");

  LdsWeighting w;
  w.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) w.bin_edges[b] = double(b) / bins;

  std::vector<double> counts(bins, 0.0);
  for (double l : labels) counts[std::clamp(int(l * bins), 0, bins - 1)] += 1.0;

  // Truncated discrete Gaussian, renormalized where it hangs over an edge.
  const int radius = sigma_bins > 0.0 ? int(std::ceil(3.0 * sigma_bins)) : 0;
  std::vector<double> kernel(2 * radius + 1, 1.0);
  if (radius > 0) {
    for (int i = -radius; i <= radius; ++i) {
      kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma_bins * sigma_bins));
    }
  }

  w.effective_density.assign(bins, 0.0);
  for (int b = 0; b < bins; ++b) {
    double acc = 0.0, norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
      const int j = b + i;
      if (j < 0 || j >= bins) continue;
      acc += kernel[i + radius] * counts[j];
      norm += kernel[i + radius];
    }
    w.effective_density[b] = norm > 0.0 ? acc / norm : 0.0;
  }

  w.weight_per_bin.assign(bins, 0.0);
  double max_raw = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (w.effective_density[b] > 0.0) {
      w.weight_per_bin[b] = 1.0 / w.effective_density[b];
      max_raw = std::max(max_raw, w.weight_per_bin[b]);
    }
  }
  for (int b = 0; b < bins; ++b) {
    if (w.effective_density[b] <= 0.0) w.weight_per_bin[b] = max_raw > 0.0 ? max_raw : 1.0;
  }

  // Normalize to mean 1 over occupied bins.
  double sum = 0.0;
  int occupied = 0;
  for (int b = 0; b < bins; ++b) {
    if (counts[b] > 0.0) {
      sum += w.weight_per_bin[b];
      ++occupied;
    }
  }
  const double scale = occupied > 0 && sum > 0.0 ? occupied / sum : 1.0;
  for (double& x : w.weight_per_bin) x *= scale;
  return w;
}

double sparse_l1_loss(const TraversabilityImage& prediction, const LabelImage& label,
                      const LdsWeighting& weights) {
  if (prediction.width != label.width || prediction.height != label.height) {
    throw std::invalid_argument("sparse_l1_loss: dimension mismatch");
  }
  double acc = 0.0;
  size_t n = 0;
  for (int v = 0; v < label.height; ++v) {
    for (int u = 0; u < label.width; ++u) {
      const size_t i = label.idx(v, u);
      if (!label.mask[i]) continue;
      acc += weights.weight_for(label.values[i]) *
             std::abs(double(prediction.at(v, u)) - double(label.values[i]));
      ++n;
    }
  }
  return n > 0 ? acc / double(n) : 0.0;
}

namespace {

void write_gray_pgm(const std::string& path, int width, int height,
                    const std::vector<unsigned char>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(data.data()), data.size());
}

}  // namespace

void emit_dataset(const std::string& dir, std::span<const DatasetFrame> frames) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir + "/index.csv");
  if (!index) throw std::runtime_error("cannot open for writing: " + dir + "/index.csv");
  index << "frame_time,px,py,theta,label_file,mask_file\n";

  char buf[256];
  std::vector<unsigned char> bytes;
  for (size_t k = 0; k < frames.size(); ++k) {
    const DatasetFrame& f = frames[k];
    char label_name[64], mask_name[64];
    std::snprintf(label_name, sizeof(label_name), "frame_%06zu_label.pgm", k);
    std::snprintf(mask_name, sizeof(mask_name), "frame_%06zu_mask.pgm", k);

    const size_t n = f.label.values.size();
    bytes.resize(n);
    for (size_t i = 0; i < n; ++i) {
      bytes[i] =
          (unsigned char)std::lround(std::clamp(double(f.label.values[i]), 0.0, 1.0) * 255.0);
    }
    write_gray_pgm(dir + "/" + label_name, f.label.width, f.label.height, bytes);
    for (size_t i = 0; i < n; ++i) bytes[i] = f.label.mask[i] ? 255 : 0;
    write_gray_pgm(dir + "/" + mask_name, f.label.width, f.label.height, bytes);

    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%s,%s\n", f.time, f.pose.px,
                  f.pose.py, f.pose.theta, label_name, mask_name);
    index << buf;
  }
}

}  // namespace travnav
