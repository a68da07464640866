#ifndef TRAVNAV_CAMERA_HPP
#define TRAVNAV_CAMERA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "travnav/kinodynamics.hpp"
#include "travnav/rng.hpp"
#include "travnav/world.hpp"

namespace travnav {

/// Pinhole intrinsics. Pixel centers sit at integer coordinates; the
/// valid image domain is u in [0, width-1], v in [0, height-1].
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 424;
  int height = 240;

  /// Build intrinsics from horizontal/vertical full field-of-view angles.
  static CameraIntrinsics from_fov(int width, int height, double hfov_rad,
                                   double vfov_rad);
};

/// Camera pose in the robot frame (x forward, y left, z up): mounted
/// height_above_ground up, forward_offset ahead of the robot center,
/// pitched down by pitch_down.
struct CameraExtrinsics {
  double height_above_ground = 1.0;
  double pitch_down = 0.873;  // rad
  double forward_offset = 0.0;
};

struct CameraConfig {
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
  double max_range = 5.0;      // meters, ground points beyond read as out of FOV
  double block_height = 0.15;  // patches taller than this occlude the view
};

/// Predicted (or oracle) traversability in image space, with the robot
/// pose at capture time. grid is row-major, grid[v * width + u].
struct TraversabilityImage {
  int width = 0;
  int height = 0;
  std::vector<float> grid;
  State2D frame_pose;

  float at(int v, int u) const { return grid[size_t(v) * width + u]; }
  float& at(int v, int u) { return grid[size_t(v) * width + u]; }
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct GroundPoint {
  double x = 0.0;
  double y = 0.0;
};

/// World ground point (z = 0) into pixel coordinates. Absent when the
/// point is behind the camera, outside the image, or beyond max_range.
std::optional<Pixel> project_ground_point(double wx, double wy, const State2D& robot_pose,
                                          const CameraConfig& cam);

/// Pixel ray intersected with the ground plane; absent when the ray
/// points at or above the horizon.
std::optional<GroundPoint> back_project_pixel(double u, double v, const State2D& robot_pose,
                                              const CameraConfig& cam);

/// Bilinear interpolation over pixel centers; 0 outside [0,W-1]x[0,H-1].
double bilinear_sample(const TraversabilityImage& img, double u, double v);

/// Per-pixel ground intersections in the robot frame, precomputed once
/// per camera configuration (they do not depend on the robot pose).
class GroundGrid {
 public:
  struct Cell {
    float gx = 0.0f;    // robot-frame ground point
    float gy = 0.0f;
    float range = 0.0f; // planar distance from the robot center
    uint8_t valid = 0;  // ray hits the ground within max_range
  };

  explicit GroundGrid(const CameraConfig& cam);

  const Cell& cell(int v, int u) const { return cells_[size_t(v) * width_ + u]; }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_;
  int height_;
  std::vector<Cell> cells_;
};

/// Ground-truth predictor rendering (TravNet stand-in). kOracle renders
/// the true traction field; kGeometric renders 1 everywhere except
/// patches taller than geom_height (the LiDAR analog).
class OracleRenderer {
 public:
  enum class Mode { kOracle, kGeometric };

  explicit OracleRenderer(const CameraConfig& cam);

  TraversabilityImage render(const State2D& robot_pose, const TractionField& field,
                             double noise_sigma = 0.0, Rng* rng = nullptr,
                             Mode mode = Mode::kOracle, double geom_height = 0.15) const;

  const CameraConfig& camera() const { return cam_; }

 private:
  CameraConfig cam_;
  GroundGrid grid_;
};

/// Convenience wrapper building a one-shot renderer.
TraversabilityImage render_oracle_image(const State2D& robot_pose, const TractionField& field,
                                        const CameraConfig& cam, double noise_sigma, Rng& rng);

/// 8-bit PGM dump (values scaled by 255) and exact-value CSV.
void write_pgm(const std::string& path, const TraversabilityImage& img);
void write_csv(const std::string& path, const TraversabilityImage& img);

}  // namespace travnav

#endif  // TRAVNAV_CAMERA_HPP
