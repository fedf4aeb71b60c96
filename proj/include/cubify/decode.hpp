#pragma once

#include <optional>

#include <Eigen/Core>

#include "cubify/camera.hpp"
#include "cubify/geometry.hpp"

namespace cubify {

// Metric depth image, meters; 0 marks a missing measurement.
struct DepthMap {
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  int width() const { return static_cast<int>(values.cols()); }
  int height() const { return static_cast<int>(values.rows()); }
};

void validate(const DepthMap& depth);

inline constexpr double kSigmaFloor = 1e-3;

struct DepthStats {
  double mu = 0;
  double sigma = 1;
};

// Mean and population standard deviation over valid (> 0) pixels, sigma
// clamped to kSigmaFloor. Throws ValidationError with fewer than 2 valid pixels.
DepthStats depth_stats(const DepthMap& depth);

// Network output for one query. In RGB-D mode z and dims are in the affine
// normalized units of the input depth.
struct RawPrediction {
  double u = 0, v = 0;  // projected 3D center, full-resolution pixels
  double z = 1;
  Vec3d dims = Vec3d::Ones();
  double yaw = 0;
  double score = 0;
};

// Metric gravity-frame box from a raw prediction: with stats, z' = sigma z + mu
// and dims' = sigma dims; the center is the backprojection of (u, v) at z',
// rotated into the camera's gravity-aligned frame. Returns nullopt when the
// rescaled depth or dims are not positive. Throws ValidationError when the
// camera lacks a gravity rotation.
std::optional<GravityBoxd> decode(const RawPrediction& pred, const CameraFramed& camera,
                                  const std::optional<DepthStats>& stats = std::nullopt);

}  // namespace cubify
