#include "cubify/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cubify/error.hpp"

namespace cubify {

namespace {

// Shortest augmenting path with row/column potentials. Requires rows <= cols.
// Returns the column assigned to each row.
std::vector<std::size_t> solve_wide(const Eigen::MatrixXd& a) {
  const std::size_t n = a.rows(), m = a.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based with a sentinel column 0, as in the classic formulation.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw ValidationError("hungarian: cost matrix contains NaN or infinity");
  Assignment pairs;
  if (cost.rows() == 0 || cost.cols() == 0) return pairs;
  if (cost.rows() <= cost.cols()) {
    const auto cols = solve_wide(cost);
    for (std::size_t r = 0; r < cols.size(); ++r) pairs.emplace_back(r, cols[r]);
  } else {
    const Eigen::MatrixXd t = cost.transpose();
    const auto rows = solve_wide(t);
    for (std::size_t c = 0; c < rows.size(); ++c) pairs.emplace_back(rows[c], c);
    std::sort(pairs.begin(), pairs.end());
  }
  return pairs;
}

double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& pairs) {
  double total = 0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

std::size_t MatchResult::true_positives() const {
  return std::count_if(detection_to_gt.begin(), detection_to_gt.end(),
                       [](const auto& m) { return m.has_value(); });
}

std::vector<std::size_t> score_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

MatchResult greedy_match(const Eigen::MatrixXd& iou, std::span<const double> scores,
                         double threshold) {
  if (static_cast<std::size_t>(iou.rows()) != scores.size())
    throw ValidationError("greedy_match: IoU rows must equal the number of detections");
  MatchResult result;
  result.detection_to_gt.assign(iou.rows(), std::nullopt);
  result.gt_to_detection.assign(iou.cols(), std::nullopt);
  for (const std::size_t d : score_order(scores)) {
    std::optional<std::size_t> best;
    double best_iou = threshold;
    for (Eigen::Index g = 0; g < iou.cols(); ++g) {
      if (result.gt_to_detection[g]) continue;
      const double v = iou(d, g);
      if (v >= best_iou && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best) {
      result.detection_to_gt[d] = best;
      result.gt_to_detection[*best] = d;
    }
  }
  return result;
}

}  // namespace cubify
