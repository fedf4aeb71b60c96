#include "cubify/pipeline.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <memory>
#include <set>

#include "cubify/enclosing.hpp"
#include "cubify/error.hpp"

namespace cubify {

void validate(const SceneAnnotations& scene) {
  std::set<std::string> seen;
  for (const auto& b : scene.boxes) {
    if (!seen.insert(b.box_id).second)
      throw ValidationError("duplicate box_id '" + b.box_id + "'");
    try {
      validate(b.box);
    } catch (const ValidationError& e) {
      throw ValidationError("box '" + b.box_id + "': " + e.what());
    }
  }
}

void validate(const PipelineParams& p) {
  if (p.render_width <= 0 || p.render_height <= 0)
    throw ValidationError("render resolution must be positive");
  if (p.subdivisions < 1) throw ValidationError("subdivisions must be >= 1");
  if (!(p.keep_ratio > 0 && p.keep_ratio <= 1)) throw ValidationError("keep_ratio must be in (0, 1]");
  if (!(p.occlusion_margin >= 0)) throw ValidationError("occlusion_margin must be >= 0");
  if (p.ray_stride < 1) throw ValidationError("ray_stride must be >= 1");
  if (p.min_visible_pixels < 0) throw ValidationError("min_visible_pixels must be >= 0");
}

namespace {

// Box with the rotation of `box` spanning local extents [lo, hi] (already
// inside the box), each widened to kMinCutExtent if thinner.
Box3d cut_box_to_extents(const Box3d& box, Vec3d lo, Vec3d hi) {
  const Vec3d half = box.dims / 2;
  for (int k = 0; k < 3; ++k) {
    const double floor = std::min(kMinCutExtent, box.dims[k]);
    if (hi[k] - lo[k] >= floor) continue;
    const double mid = std::clamp((lo[k] + hi[k]) / 2, -half[k] + floor / 2, half[k] - floor / 2);
    lo[k] = mid - floor / 2;
    hi[k] = mid + floor / 2;
  }
  Box3d out = box;
  out.center = box.center + box.rotation * ((lo + hi) / 2);
  out.dims = hi - lo;
  return out;
}

}  // namespace

Box3d cut_box_to_points(const Box3d& box, std::span<const Vec3d> points) {
  if (points.empty()) throw ValidationError("cut_box_to_points: no points");
  const Vec3d half = box.dims / 2;
  const Mat3d to_local = box.rotation.transpose();
  Vec3d lo = Vec3d::Constant(std::numeric_limits<double>::infinity());
  Vec3d hi = -lo;
  for (const Vec3d& p : points) {
    const Vec3d local = (to_local * (p - box.center)).cwiseMax(-half).cwiseMin(half);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  return cut_box_to_extents(box, lo, hi);
}

namespace {

// Unit ray through each render pixel center, plus the ray length per unit z.
struct RayTable {
  int width = 0;
  std::vector<Vec3d> dirs;
  std::vector<double> length_per_z;
  std::array<double, 11> key{};  // intrinsics and distortion it was built for

  static std::array<double, 11> key_of(const CameraFramed& cam) {
    const auto& k = cam.intrinsics;
    const auto& d = cam.distortion;
    return {k.fx, k.fy, k.cx, k.cy, double(k.width), double(k.height), d.k1, d.k2, d.k3, d.p1, d.p2};
  }

  explicit RayTable(const CameraFramed& cam) : width(cam.intrinsics.width), key(key_of(cam)) {
    const int w = cam.intrinsics.width, h = cam.intrinsics.height;
    dirs.resize(std::size_t(w) * h);
    length_per_z.resize(dirs.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Vec2d n = undistort(cam, Vec2d(x + 0.5, y + 0.5));
        const Vec3d d(n.x(), n.y(), 1.0);
        const std::size_t i = std::size_t(y) * w + x;
        length_per_z[i] = d.norm();
        dirs[i] = d / length_per_z[i];
      }
    }
  }
};

// Rays from the camera origin clipped against one box, in the box frame. Only
// the local extents of the segment endpoints are kept; they equal
// cut_box_to_points over the same endpoints.
class BoxCutter {
 public:
  explicit BoxCutter(const Box3d& box)
      : box_(box), to_local_(box.rotation.transpose()), origin_(-(to_local_ * box.center)),
        half_(box.dims / 2) {}

  // Clips the ray through render pixel i to z in [z_lo, z_hi].
  bool add(const RayTable& rays, std::size_t i, double z_lo, double z_hi) {
    const Vec3d d = to_local_ * rays.dirs[i];
    double t0 = 0, t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      if (d[k] == 0) {
        if (std::abs(origin_[k]) > half_[k]) return false;
        continue;
      }
      const double inv = 1 / d[k];
      double ta = (-half_[k] - origin_[k]) * inv, tb = (half_[k] - origin_[k]) * inv;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    t0 = std::max(t0, z_lo * rays.length_per_z[i]);
    t1 = std::min(t1, z_hi * rays.length_per_z[i]);
    if (!(t0 <= t1)) return false;
    for (const double t : {t0, t1}) {
      const Vec3d local = (origin_ + t * d).cwiseMax(-half_).cwiseMin(half_);
      lo_ = lo_.cwiseMin(local);
      hi_ = hi_.cwiseMax(local);
    }
    any_ = true;
    return true;
  }

  bool empty() const { return !any_; }
  Box3d cut() const { return cut_box_to_extents(box_, lo_, hi_); }

 private:
  Box3d box_;
  Mat3d to_local_;
  Vec3d origin_, half_;
  Vec3d lo_ = Vec3d::Constant(std::numeric_limits<double>::infinity());
  Vec3d hi_ = Vec3d::Constant(-std::numeric_limits<double>::infinity());
  bool any_ = false;
};

struct Candidate {
  std::size_t annotation;
  Box3d camera_box;
  Box3d frustum_cut;
};

}  // namespace

FrameGroundTruth render_frame_gt(const SceneAnnotations& annotations, const CameraFramed& camera,
                                 const DepthMap& scene_depth, const PipelineParams& params,
                                 std::string frame_id, const RenderDebugSink& debug) {
  validate(camera);
  validate(params);
  validate(scene_depth);
  if (!camera.gravity_to_camera) throw ValidationError("camera frame has no gravity rotation");
  const int img_w = camera.intrinsics.width, img_h = camera.intrinsics.height;
  if (scene_depth.width() <= 0 || scene_depth.height() <= 0 ||
      std::int64_t(scene_depth.width()) * img_h != std::int64_t(scene_depth.height()) * img_w)
    throw ValidationError("scene depth is not registered to the image (aspect ratio differs)");

  FrameGroundTruth gt;
  gt.frame_id = std::move(frame_id);
  gt.image_width = img_w;
  gt.image_height = img_h;

  const int rw = params.render_width, rh = params.render_height;
  const RasterTarget target(camera, rw, rh);
  const CameraFramed& render_cam = target.camera();
  const Frustum<double> frustum = build_frustum(camera);

  // Steps 1-3.
  std::vector<Candidate> candidates;
  std::vector<InstanceRender> renders;
  for (std::size_t i = 0; i < annotations.boxes.size(); ++i) {
    const Box3d cam_box =
        transform_box(annotations.boxes[i].box, camera.world_to_camera, FrameTag::kCamera);
    if (!frustum_cull(frustum, cam_box)) continue;
    InstanceRender r = target.rasterize(cam_box, params.subdivisions, i);
    if (r.pixel_count() == 0) continue;
    candidates.push_back({i, cam_box, cam_box});
    renders.push_back(std::move(r));
  }
  if (candidates.empty()) return gt;

  // frames of one capture usually share a camera model, so keep the last table
  thread_local std::unique_ptr<RayTable> cached;
  if (!cached || cached->key != RayTable::key_of(render_cam))
    cached = std::make_unique<RayTable>(render_cam);
  const RayTable& rays = *cached;

  // Step 4.
  std::vector<char> alive(candidates.size(), 1);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    BoxCutter cutter(candidates[c].camera_box);
    const InstanceRender& r = renders[c];
    const Mask& mask = r.mask;
    // stay on the stride grid anchored at pixel 0
    const int sx0 = (r.x0 + params.ray_stride - 1) / params.ray_stride * params.ray_stride;
    const int sy0 = (r.y0 + params.ray_stride - 1) / params.ray_stride * params.ray_stride;
    for (int y = sy0; y <= r.y1; y += params.ray_stride)
      for (int x = sx0; x <= r.x1; x += params.ray_stride)
        if (mask(y, x)) cutter.add(rays, std::size_t(y) * rw + x, camera.near, camera.far);
    if (cutter.empty()) {
      alive[c] = 0;
      continue;
    }
    candidates[c].frustum_cut = cutter.cut();
  }

  // Step 5.
  const std::vector<Mask> visibility = composite_visibility(renders);
  if (debug)
    for (std::size_t c = 0; c < candidates.size(); ++c)
      debug(annotations.boxes[candidates[c].annotation].box_id, renders[c], visibility[c]);

  // Steps 6-7.
  const double depth_sx = double(scene_depth.width()) / rw;
  const double depth_sy = double(scene_depth.height()) / rh;
  const Mat3d to_gravity = camera.camera_to_gravity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!alive[c]) continue;
    const Candidate& cand = candidates[c];
    BoxCutter cutter(cand.frustum_cut);
    int visible = 0;
    int x_lo = rw, x_hi = -1, y_lo = rh, y_hi = -1;
    const InstanceRender& r = renders[c];  // visibility lies inside the mask rectangle
    for (int y = r.y0; y <= r.y1; ++y) {
      const int dy = std::min(scene_depth.height() - 1, int((y + 0.5) * depth_sy));
      for (int x = r.x0; x <= r.x1; ++x) {
        if (!visibility[c](y, x)) continue;
        const int dx = std::min(scene_depth.width() - 1, int((x + 0.5) * depth_sx));
        const double d = scene_depth.values(dy, dx);
        const double z_end = d > 0 ? std::min(camera.far, d + params.occlusion_margin) : camera.far;
        if (!cutter.add(rays, std::size_t(y) * rw + x, camera.near, z_end)) continue;
        ++visible;
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
    if (visible == 0 || visible < params.min_visible_pixels) continue;

    const AnnotatedBox& src = annotations.boxes[cand.annotation];
    InstanceGroundTruth inst;
    inst.box_id = src.box_id;
    inst.class_id = src.class_id;
    inst.cut_box_camera = cutter.cut();
    inst.cut_volume_ratio =
        std::min(1.0, box_volume(inst.cut_box_camera) / box_volume(cand.camera_box));
    if (inst.cut_volume_ratio < params.keep_ratio) continue;
    inst.visible_pixels = visible;
    inst.visible_pixel_fraction = double(visible) / double(renders[c].pixel_count());
    inst.cut_box = enclosing_gravity_box(inst.cut_box_camera, to_gravity);
    const double sx = double(img_w) / rw, sy = double(img_h) / rh;
    inst.box2d = {x_lo * sx, y_lo * sy, (x_hi + 1) * sx, (y_hi + 1) * sy};
    gt.instances.push_back(std::move(inst));
  }
  return gt;
}

}  // namespace cubify
