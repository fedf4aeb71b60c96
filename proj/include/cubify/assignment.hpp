#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace cubify {

using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Minimum-cost assignment of min(rows, cols) pairs (Hungarian method with
// potentials, O(n^2 m)). Pairs are returned sorted by row. Throws
// ValidationError on NaN or infinite costs.
Assignment hungarian(const Eigen::MatrixXd& cost);

double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& pairs);

struct MatchResult {
  // Indexed by detection position in the input, not in score order.
  std::vector<std::optional<std::size_t>> detection_to_gt;
  std::vector<std::optional<std::size_t>> gt_to_detection;

  std::size_t true_positives() const;
};

// COCO-style greedy matching. Detections are visited by descending score,
// equal scores by ascending index; each takes the unmatched ground truth with
// the highest IoU >= threshold (lower gt index on ties). `iou` is
// detections x ground truths.
MatchResult greedy_match(const Eigen::MatrixXd& iou, std::span<const double> scores,
                         double threshold);

template <typename Det, typename Gt, typename IouFn>
MatchResult greedy_match(std::span<const Det> detections, std::span<const double> scores,
                         std::span<const Gt> gts, IouFn&& iou_fn, double threshold) {
  Eigen::MatrixXd iou(detections.size(), gts.size());
  for (std::size_t d = 0; d < detections.size(); ++d)
    for (std::size_t g = 0; g < gts.size(); ++g) iou(d, g) = iou_fn(detections[d], gts[g]);
  return greedy_match(iou, scores, threshold);
}

// Indices of `scores` in descending score order, ties by ascending index.
std::vector<std::size_t> score_order(std::span<const double> scores);

}  // namespace cubify
