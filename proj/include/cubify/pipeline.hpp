#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubify/camera.hpp"
#include "cubify/decode.hpp"
#include "cubify/geometry.hpp"
#include "cubify/raster.hpp"

namespace cubify {

struct AnnotatedBox {
  std::string box_id;
  Box3d box;  // world frame
  std::optional<int> class_id;
};

struct SceneAnnotations {
  std::string scene_id;
  std::vector<AnnotatedBox> boxes;
};

// Throws ValidationError on duplicate ids or invalid boxes.
void validate(const SceneAnnotations& scene);

struct PipelineParams {
  int render_width = kDefaultRenderWidth;
  int render_height = kDefaultRenderHeight;
  int subdivisions = kDefaultSubdivisions;
  double keep_ratio = 0.25;        // minimum cut volume / original volume
  double occlusion_margin = 0.05;  // meters allowed past the scene surface
  int ray_stride = 1;              // frustum-cut pixel subsampling
  int min_visible_pixels = 10;     // at render resolution
};

void validate(const PipelineParams& params);

using Box2d = std::array<double, 4>;  // x1, y1, x2, y2 in full-resolution pixels

struct InstanceGroundTruth {
  std::string box_id;
  std::optional<int> class_id;
  GravityBoxd cut_box;  // camera gravity-aligned frame
  Box3d cut_box_camera;  // the same cut, before gravity alignment
  Box2d box2d{};
  double visible_pixel_fraction = 0;
  double cut_volume_ratio = 0;
  int visible_pixels = 0;
};

struct FrameGroundTruth {
  std::string frame_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<InstanceGroundTruth> instances;
};

// Shrinks `box` to the local-frame extents of `points`, keeping its rotation.
// Points are clamped into the box first, and extents below 1e-4 m are widened
// to that floor without leaving the box, so the result never exceeds the input.
Box3d cut_box_to_points(const Box3d& box, std::span<const Vec3d> points);

inline constexpr double kMinCutExtent = 1e-4;

// Per-frame ground truth from world-space annotations:
//  1. world -> camera transform
//  2. conservative frustum culling
//  3. independent rasterization of each survivor
//  4. frustum cut: ray from each (strided) mask pixel clipped to [near, far]
//  5. box-vs-box visibility by nearest rendered depth
//  6. scene cut: rays from visible pixels end at scene depth + margin
//     (missing depth runs to the far plane)
//  7. drop boxes cut below keep_ratio or with too few visible pixels
// Survivors are converted to yaw-only boxes in the gravity frame, and box2d is
// the tight rectangle of the scene-visible pixels at image resolution.
// `debug`, when set, receives every rendered box with its visibility mask.
using RenderDebugSink =
    std::function<void(const std::string& box_id, const InstanceRender& render, const Mask& visible)>;

FrameGroundTruth render_frame_gt(const SceneAnnotations& annotations, const CameraFramed& camera,
                                 const DepthMap& scene_depth, const PipelineParams& params,
                                 std::string frame_id = {}, const RenderDebugSink& debug = {});

}  // namespace cubify
