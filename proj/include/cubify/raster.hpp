#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cubify/camera.hpp"
#include "cubify/geometry.hpp"

namespace cubify {

// Row-major images indexed (row = v, col = u).
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DepthImage = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kDefaultRenderWidth = 320;
inline constexpr int kDefaultRenderHeight = 240;
inline constexpr int kDefaultSubdivisions = 8;

struct InstanceRender {
  int width = 0;
  int height = 0;
  Mask mask;
  DepthImage depth;  // camera-space z, +inf outside the mask
  std::size_t box_id = 0;
  // inclusive pixel rectangle holding the mask; empty when x1 < x0
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  Eigen::Index pixel_count() const { return mask.count(); }
};

using Triangle = std::array<Vec3d, 3>;

// Splits each face into subdivisions x subdivisions quads, two triangles per
// quad, faces ordered -x, +x, -y, +y, -z, +z in the box frame. Vertices on
// shared edges are bitwise identical across faces.
std::vector<Triangle> tessellate_box(const Box3d& box, int subdivisions);

// Precomputed per-camera state for rasterizing many boxes at one resolution.
class RasterTarget {
 public:
  RasterTarget(const CameraFramed& camera, int width, int height);

  const CameraFramed& camera() const { return camera_; }
  int width() const { return camera_.intrinsics.width; }
  int height() const { return camera_.intrinsics.height; }

  InstanceRender rasterize(const Box3d& box, int subdivisions, std::size_t box_id) const;

 private:
  CameraFramed camera_;  // rescaled to the render resolution
  std::array<Plane<double>, 5> clip_planes_;
};

// Renders one camera-frame box into a binary mask with a nearest-surface depth
// buffer. Triangles are clipped to the near plane and a margin around the
// image, projected per vertex through the full distortion model, and filled
// by pixel-center coverage with a top-left rule. Depth is perspective-correct
// camera z. Faces turned away from the camera are skipped unless the near
// plane cuts the box open; the nearest surface wins.
InstanceRender rasterize_box(const CameraFramed& camera, const Box3d& box, int width, int height,
                             int subdivisions = kDefaultSubdivisions, std::size_t box_id = 0);

// Assigns every pixel to the render with the smallest depth there (lower
// box_id on ties). Output masks follow the input order, are subsets of the
// input masks, and are pairwise disjoint.
std::vector<Mask> composite_visibility(std::span<const InstanceRender> renders);

}  // namespace cubify
