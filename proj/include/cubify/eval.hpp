#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubify/geometry.hpp"
#include "cubify/pipeline.hpp"

namespace cubify {

struct Detection {
  std::string frame_id;
  double score = 0;
  GravityBoxd box;  // camera gravity-aligned frame
  std::optional<Box2d> box2d;
  std::optional<int> class_id;
};

// Half-open distance interval [lo, hi) in meters.
struct DistanceBucket {
  double lo = 0;
  double hi = 0;
};

struct EvalConfig {
  std::vector<double> iou_thresholds{0.25, 0.50};
  int max_detections_per_frame = 100;
  bool class_agnostic = false;
  std::vector<DistanceBucket> buckets{{0, 2}, {2, 4}, {4, 5}};
  // Recall samples for interpolated AP; 0 integrates the precision envelope
  // exactly instead of sampling it.
  int interpolation_points = 101;
  // Match on image rectangles (box2d) instead of 3D boxes.
  bool rect_iou = false;
};

void validate(const EvalConfig& config);

struct PrPoint {
  double recall = 0;
  double precision = 0;
};

// One (class, threshold, bucket) cell. `bucket` empty means all distances.
struct EvalCell {
  std::optional<int> class_id;
  double threshold = 0;
  std::optional<std::size_t> bucket;
  double ap = 0;
  double ar = 0;
  std::vector<PrPoint> pr;
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t num_gt = 0;
};

// Class-averaged metric over classes that have ground truth in the cell;
// empty when no class does.
struct EvalSummary {
  double threshold = 0;
  std::optional<std::size_t> bucket;
  std::optional<double> ap;
  std::optional<double> ar;
  std::size_t num_classes = 0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<EvalCell> cells;
  std::vector<EvalSummary> summary;

  const EvalSummary& at(double threshold, std::optional<std::size_t> bucket = std::nullopt) const;
};

// COCO-style interpolated AP: precision is made non-increasing from the right,
// then sampled at `points` evenly spaced recalls in [0, 1] (a recall level
// past the last point counts as zero precision). points == 0 returns the area
// under the envelope. Empty input gives 0.
double ap_from_pr(std::span<const PrPoint> pr, int points = 101);

// Index of the bucket containing the norm of the box center.
std::optional<std::size_t> bucket_of(const GravityBoxd& box,
                                     std::span<const DistanceBucket> buckets);

// Dataset AP/AR. Per frame the top max_detections_per_frame detections by
// score are greedily matched (per class unless class_agnostic) against the
// ground truth at each IoU threshold; precision/recall accumulate over the
// dataset in score order. Bucket cells use COCO-style ignores: ground truth
// outside the bucket is not counted, detections matched to it are ignored,
// and unmatched detections count as false positives only in their own bucket.
// Throws ValidationError for detections on unknown frames or when there is no
// ground truth at all.
EvalReport evaluate(std::span<const Detection> detections, std::span<const FrameGroundTruth> gt,
                    const EvalConfig& config);

double rect_iou(const Box2d& a, const Box2d& b);

}  // namespace cubify
