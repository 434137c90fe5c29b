#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hybridmap/image.hpp"

namespace hybridmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics. An integer pixel (row, col) covers the unit square
/// whose center is (col + 0.5, row + 0.5) in continuous image coordinates.
struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const;  // throws InputError on violated invariants
};

/// Rigid world-from-camera transform. Orthonormality (R Rt = I, det = +1)
/// is checked on every construction.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 to_world(const Vec3& p_camera) const { return rotation_ * p_camera + translation_; }
  Vec3 to_camera(const Vec3& p_world) const {
    return rotation_.transpose() * (p_world - translation_);
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// One posed RGB-D observation. Immutable after construction; invariants
/// (depth finite and nonnegative, color in [0,1]) are checked up front.
struct RGBDFrame {
  ImageRGB color;
  ImageDepth depth;
  CameraIntrinsics intrinsics;
  Pose pose;
  int64_t frame_id = 0;

  RGBDFrame(ImageRGB color_img, ImageDepth depth_img, const CameraIntrinsics& intr,
            const Pose& p, int64_t id);
};

/// A ray through a pixel center. gt_depth is the ground-truth distance
/// *along the ray* (the depth image's z value rescaled by the ray length
/// per unit z), 0 when the pixel has no depth.
struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
  int pixel_row = 0;
  int pixel_col = 0;
  Vec3 gt_color = Vec3::Zero();
  double gt_depth = 0;
};

struct PixelProjection {
  double u = 0, v = 0;  // continuous image coordinates
  double z = 0;         // camera-frame z distance
};

/// Back-projects every valid-depth pixel to a world point
/// p = pose * (depth * K^-1 [u+0.5, v+0.5, 1]).
std::vector<Vec3> back_project(const RGBDFrame& frame);

/// Projects a world point into the frame. Returns nullopt when the point is
/// behind the camera or lands outside the image bounds.
std::optional<PixelProjection> project(const Vec3& point_world, const CameraIntrinsics& intr,
                                       const Pose& pose);

/// Rays through the centers of the given (row, col) pixels, carrying the
/// frame's color and depth as ground truth. Throws InputError on
/// out-of-bounds pixels.
std::vector<Ray> generate_rays(const RGBDFrame& frame,
                               const std::vector<std::pair<int, int>>& pixels);

/// Ray through one pixel center without ground-truth lookup (for rendering
/// from poses that have no reference image).
Ray pixel_ray(const CameraIntrinsics& intr, const Pose& pose, int row, int col);

/// Length of the camera ray direction per unit z for a pixel; converts
/// between z-depth and along-ray distance.
double ray_norm_per_z(const CameraIntrinsics& intr, int row, int col);

}  // namespace hybridmap
