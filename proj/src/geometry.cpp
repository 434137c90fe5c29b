#include "hybridmap/geometry.hpp"

#include <cmath>
#include <sstream>

#include "hybridmap/errors.hpp"

namespace hybridmap {

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw InputError("intrinsics: focal lengths must be positive");
  if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height))
    throw InputError("intrinsics: principal point outside image");
  if (width <= 0 || height <= 0) throw InputError("intrinsics: empty image size");
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho_err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-6) {
    std::ostringstream os;
    os << "pose rotation not orthonormal (max |R Rt - I| = " << ortho_err << ")";
    throw InputError(os.str());
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-6)
    throw InputError("pose rotation determinant != +1");
}

RGBDFrame::RGBDFrame(ImageRGB color_img, ImageDepth depth_img, const CameraIntrinsics& intr,
                     const Pose& p, int64_t id)
    : color(std::move(color_img)), depth(std::move(depth_img)), intrinsics(intr), pose(p),
      frame_id(id) {
  intrinsics.validate();
  if (color.width != intrinsics.width || color.height != intrinsics.height ||
      depth.width != intrinsics.width || depth.height != intrinsics.height)
    throw InputError("frame image sizes disagree with intrinsics");
  for (float d : depth.data)
    if (!(d >= 0.f) || !std::isfinite(d)) throw InputError("frame depth must be finite and >= 0");
  for (float c : color.data)
    if (!(c >= 0.f && c <= 1.f)) throw InputError("frame color must lie in [0,1]");
}

std::vector<Vec3> back_project(const RGBDFrame& frame) {
  const CameraIntrinsics& k = frame.intrinsics;
  std::vector<Vec3> points;
  points.reserve(frame.depth.pixel_count());
  for (int r = 0; r < k.height; ++r) {
    for (int c = 0; c < k.width; ++c) {
      const double d = frame.depth.at(r, c);
      if (d <= 0) continue;
      const Vec3 p_cam(d * ((c + 0.5 - k.cx) / k.fx), d * ((r + 0.5 - k.cy) / k.fy), d);
      points.push_back(frame.pose.to_world(p_cam));
    }
  }
  return points;
}

std::optional<PixelProjection> project(const Vec3& point_world, const CameraIntrinsics& intr,
                                       const Pose& pose) {
  const Vec3 p = pose.to_camera(point_world);
  if (p.z() <= 0) return std::nullopt;
  PixelProjection out;
  out.u = intr.fx * p.x() / p.z() + intr.cx;
  out.v = intr.fy * p.y() / p.z() + intr.cy;
  out.z = p.z();
  if (out.u < 0 || out.u >= intr.width || out.v < 0 || out.v >= intr.height) return std::nullopt;
  return out;
}

double ray_norm_per_z(const CameraIntrinsics& intr, int row, int col) {
  const double x = (col + 0.5 - intr.cx) / intr.fx;
  const double y = (row + 0.5 - intr.cy) / intr.fy;
  return std::sqrt(x * x + y * y + 1.0);
}

Ray pixel_ray(const CameraIntrinsics& intr, const Pose& pose, int row, int col) {
  Ray ray;
  const Vec3 dir_cam((col + 0.5 - intr.cx) / intr.fx, (row + 0.5 - intr.cy) / intr.fy, 1.0);
  ray.origin = pose.translation();
  ray.direction = (pose.rotation() * dir_cam).normalized();
  ray.pixel_row = row;
  ray.pixel_col = col;
  return ray;
}

std::vector<Ray> generate_rays(const RGBDFrame& frame,
                               const std::vector<std::pair<int, int>>& pixels) {
  const CameraIntrinsics& k = frame.intrinsics;
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const auto& [row, col] : pixels) {
    if (row < 0 || row >= k.height || col < 0 || col >= k.width) {
      std::ostringstream os;
      os << "pixel (" << row << ", " << col << ") outside " << k.width << "x" << k.height
         << " image";
      throw InputError(os.str());
    }
    Ray ray = pixel_ray(k, frame.pose, row, col);
    ray.gt_color = frame.color.pixel(row, col);
    const double z = frame.depth.at(row, col);
    ray.gt_depth = z > 0 ? z * ray_norm_per_z(k, row, col) : 0.0;
    rays.push_back(ray);
  }
  return rays;
}

}  // namespace hybridmap
