#include "cubify/decode.hpp"

#include <cmath>

#include "cubify/error.hpp"

namespace cubify {

void validate(const DepthMap& depth) {
  if (!depth.values.allFinite() || (depth.values < 0).any())
    throw ValidationError("depth map values must be finite and non-negative");
}

DepthStats depth_stats(const DepthMap& depth) {
  const auto valid = (depth.values > 0);
  const Eigen::Index n = valid.count();
  if (n < 2) throw ValidationError("depth_stats needs at least 2 valid pixels");
  const double mean = valid.select(depth.values, 0.0).sum() / double(n);
  const double var = valid.select((depth.values - mean).square(), 0.0).sum() / double(n);
  return {mean, std::max(std::sqrt(var), kSigmaFloor)};
}

std::optional<GravityBoxd> decode(const RawPrediction& pred, const CameraFramed& camera,
                                  const std::optional<DepthStats>& stats) {
  const Mat3d to_gravity = camera.camera_to_gravity();
  double z = pred.z;
  Vec3d dims = pred.dims;
  if (stats) {
    z = stats->sigma * pred.z + stats->mu;
    dims = stats->sigma * pred.dims;
  }
  if (!(z > 0) || !(dims.array() > 0).all()) return std::nullopt;
  const Vec3d center = backproject(camera, Vec2d(pred.u, pred.v), z);
  return GravityBoxd{to_gravity * center, dims, pred.yaw};
}

}  // namespace cubify
