#include "travnav/camera.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace travnav {

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double hfov_rad,
                                            double vfov_rad) {
  CameraIntrinsics intr;
  intr.width = width;
  intr.height = height;
  intr.fx = 0.5 * width / std::tan(0.5 * hfov_rad);
  intr.fy = 0.5 * height / std::tan(0.5 * vfov_rad);
  intr.cx = 0.5 * (width - 1);
  intr.cy = 0.5 * (height - 1);
  return intr;
}

namespace {
constexpr double kMinDepth = 1e-9;
}

std::optional<Pixel> project_ground_point(double wx, double wy, const State2D& robot_pose,
                                          const CameraConfig& cam) {
  const double dxw = wx - robot_pose.px;
  const double dyw = wy - robot_pose.py;
  if (dxw * dxw + dyw * dyw > cam.max_range * cam.max_range) return std::nullopt;

  const double c = std::cos(robot_pose.theta), s = std::sin(robot_pose.theta);
  const double rx = c * dxw + s * dyw;   // robot frame, x forward
  const double ry = -s * dxw + c * dyw;  // y left

  const CameraExtrinsics& e = cam.extrinsics;
  const double ca = std::cos(e.pitch_down), sa = std::sin(e.pitch_down);
  const double fx_rel = rx - e.forward_offset;
  const double pcx = -ry;
  const double pcy = -sa * fx_rel + ca * e.height_above_ground;
  const double pcz = ca * fx_rel + sa * e.height_above_ground;
  if (pcz <= kMinDepth) return std::nullopt;

  const CameraIntrinsics& k = cam.intrinsics;
  const double u = k.cx + k.fx * pcx / pcz;
  const double v = k.cy + k.fy * pcy / pcz;
  if (u < 0.0 || u > k.width - 1 || v < 0.0 || v > k.height - 1) return std::nullopt;
  return Pixel{u, v};
}

std::optional<GroundPoint> back_project_pixel(double u, double v, const State2D& robot_pose,
                                              const CameraConfig& cam) {
  const CameraIntrinsics& k = cam.intrinsics;
  const CameraExtrinsics& e = cam.extrinsics;
  const double a = (u - k.cx) / k.fx;
  const double b = (v - k.cy) / k.fy;
  const double ca = std::cos(e.pitch_down), sa = std::sin(e.pitch_down);
  // Ray direction in the robot frame; descent rate below the horizon.
  const double descent = b * ca + sa;
  if (descent <= 1e-12) return std::nullopt;
  const double t = e.height_above_ground / descent;
  const double gx = e.forward_offset + t * (ca - b * sa);
  const double gy = t * (-a);

  const double c = std::cos(robot_pose.theta), s = std::sin(robot_pose.theta);
  return GroundPoint{robot_pose.px + c * gx - s * gy, robot_pose.py + s * gx + c * gy};
}

double bilinear_sample(const TraversabilityImage& img, double u, double v) {
  if (!(u >= 0.0) || !(v >= 0.0) || u > img.width - 1 || v > img.height - 1) return 0.0;
  const int u0 = std::min(int(u), img.width - 1);
  const int v0 = std::min(int(v), img.height - 1);
  const int u1 = std::min(u0 + 1, img.width - 1);
  const int v1 = std::min(v0 + 1, img.height - 1);
  const double fu = u - u0;
  const double fv = v - v0;
  const double top = (1.0 - fu) * img.at(v0, u0) + fu * img.at(v0, u1);
  const double bot = (1.0 - fu) * img.at(v1, u0) + fu * img.at(v1, u1);
  return (1.0 - fv) * top + fv * bot;
}

GroundGrid::GroundGrid(const CameraConfig& cam)
    : width_(cam.intrinsics.width), height_(cam.intrinsics.height) {
  cells_.resize(size_t(width_) * height_);
  const State2D origin;  // robot frame == world frame for the precompute
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) {
      Cell& c = cells_[size_t(v) * width_ + u];
      const auto g = back_project_pixel(u, v, origin, cam);
      if (!g) continue;
      const double range = std::hypot(g->x, g->y);
      if (range > cam.max_range) continue;
      c.gx = float(g->x);
      c.gy = float(g->y);
      c.range = float(range);
      c.valid = 1;
    }
  }
}

OracleRenderer::OracleRenderer(const CameraConfig& cam) : cam_(cam), grid_(cam) {}

namespace {

// Does the view ray from the camera to a ground point pass through a
// tall patch first? The ray altitude falls linearly from the camera
// height to 0 along the ground track, so the test is a 2-D segment/disk
// intersection plus an altitude comparison at the far end of the overlap.
bool ray_blocked(double cam_x, double cam_y, double cam_h, double gx, double gy,
                 const Patch& p) {
  const double dx = gx - cam_x, dy = gy - cam_y;
  const double fx = cam_x - p.cx, fy = cam_y - p.cy;
  const double a = dx * dx + dy * dy;
  if (a < 1e-18) return p.contains(cam_x, cam_y);
  const double bq = fx * dx + fy * dy;
  const double cq = fx * fx + fy * fy - p.radius * p.radius;
  const double disc = bq * bq - a * cq;
  if (disc <= 0.0) return false;
  const double sq = std::sqrt(disc);
  const double s0 = (-bq - sq) / a;
  const double s1 = (-bq + sq) / a;
  if (s1 <= 0.0 || s0 >= 1.0) return false;
  const double se = std::min(s1, 1.0);
  const double altitude = cam_h * (1.0 - se);
  return altitude <= p.height;
}

}  // namespace

TraversabilityImage OracleRenderer::render(const State2D& robot_pose,
                                           const TractionField& field, double noise_sigma,
                                           Rng* rng, Mode mode, double geom_height) const {
  TraversabilityImage img;
  img.width = grid_.width();
  img.height = grid_.height();
  img.grid.assign(size_t(img.width) * img.height, 0.0f);
  img.frame_pose = robot_pose;

  const double c = std::cos(robot_pose.theta), s = std::sin(robot_pose.theta);
  const double cam_x = robot_pose.px + c * cam_.extrinsics.forward_offset;
  const double cam_y = robot_pose.py + s * cam_.extrinsics.forward_offset;
  const double cam_h = cam_.extrinsics.height_above_ground;
  const double occl_height = (mode == Mode::kOracle) ? cam_.block_height : geom_height;

  std::vector<const Patch*> tall;
  for (const Patch& p : field.patches) {
    if (p.height > occl_height) tall.push_back(&p);
  }

  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const GroundGrid::Cell& cell = grid_.cell(v, u);
      if (!cell.valid) continue;
      const double wx = robot_pose.px + c * cell.gx - s * cell.gy;
      const double wy = robot_pose.py + s * cell.gx + c * cell.gy;

      double mu;
      if (mode == Mode::kOracle) {
        mu = field.traction_at(wx, wy).mu;
      } else {
        mu = 1.0;
        for (const Patch& p : field.patches) {
          if (p.height > geom_height && p.contains(wx, wy)) {
            mu = 0.0;
            break;
          }
        }
      }

      for (const Patch* p : tall) {
        if (ray_blocked(cam_x, cam_y, cam_h, wx, wy, *p)) {
          mu = 0.0;
          break;
        }
      }

      if (noise_sigma > 0.0 && rng) {
        mu = std::clamp(mu + rng->normal(0.0, noise_sigma), 0.0, 1.0);
      }
      img.at(v, u) = float(mu);
    }
  }
  return img;
}

TraversabilityImage render_oracle_image(const State2D& robot_pose, const TractionField& field,
                                        const CameraConfig& cam, double noise_sigma,
                                        Rng& rng) {
  return OracleRenderer(cam).render(robot_pose, field, noise_sigma, &rng);
}

void write_pgm(const std::string& path, const TraversabilityImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(img.width);
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      row[u] = (unsigned char)std::lround(std::clamp(double(img.at(v, u)), 0.0, 1.0) * 255.0);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

void write_csv(const std::string& path, const TraversabilityImage& img) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[32];
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      std::snprintf(buf, sizeof(buf), "%.9g", double(img.at(v, u)));
      out << buf << (u + 1 < img.width ? "," : "\n");
    }
  }
}

}  // namespace travnav
