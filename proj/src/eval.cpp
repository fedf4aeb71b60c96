#include "cubify/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "cubify/assignment.hpp"
#include "cubify/error.hpp"
#include "cubify/metrics.hpp"

namespace cubify {

void validate(const EvalConfig& c) {
  if (c.iou_thresholds.empty()) throw ValidationError("eval: at least one IoU threshold required");
  for (double t : c.iou_thresholds)
    if (!(t > 0 && t <= 1)) throw ValidationError("eval: IoU thresholds must be in (0, 1]");
  if (c.max_detections_per_frame < 1) throw ValidationError("eval: max detections must be >= 1");
  if (c.interpolation_points < 0 || c.interpolation_points == 1)
    throw ValidationError("eval: interpolation points must be 0 or >= 2");
  for (std::size_t i = 0; i < c.buckets.size(); ++i) {
    const auto& b = c.buckets[i];
    if (!(b.lo >= 0 && b.lo < b.hi)) throw ValidationError("eval: bucket must satisfy 0 <= lo < hi");
    if (i > 0 && b.lo < c.buckets[i - 1].hi)
      throw ValidationError("eval: buckets must be ascending and non-overlapping");
  }
}

const EvalSummary& EvalReport::at(double threshold, std::optional<std::size_t> bucket) const {
  for (const auto& s : summary)
    if (s.threshold == threshold && s.bucket == bucket) return s;
  throw ValidationError("no summary for the requested threshold/bucket");
}

double ap_from_pr(std::span<const PrPoint> pr, int points) {
  if (pr.empty()) return 0.0;
  std::vector<double> envelope(pr.size());
  double running = 0;
  for (std::size_t i = pr.size(); i-- > 0;) {
    running = std::max(running, pr[i].precision);
    envelope[i] = running;
  }
  if (points == 0) {
    double area = 0, prev_recall = 0;
    for (std::size_t i = 0; i < pr.size(); ++i) {
      area += (pr[i].recall - prev_recall) * envelope[i];
      prev_recall = pr[i].recall;
    }
    return area;
  }
  double sum = 0;
  std::size_t i = 0;
  for (int k = 0; k < points; ++k) {
    const double r = double(k) / (points - 1);
    while (i < pr.size() && pr[i].recall < r) ++i;
    if (i == pr.size()) break;
    sum += envelope[i];
  }
  return sum / points;
}

std::optional<std::size_t> bucket_of(const GravityBoxd& box,
                                     std::span<const DistanceBucket> buckets) {
  const double d = box.center.norm();
  for (std::size_t i = 0; i < buckets.size(); ++i)
    if (d >= buckets[i].lo && d < buckets[i].hi) return i;
  return std::nullopt;
}

double rect_iou(const Box2d& a, const Box2d& b) {
  const double iw = std::min(a[2], b[2]) - std::max(a[0], b[0]);
  const double ih = std::min(a[3], b[3]) - std::max(a[1], b[1]);
  if (iw <= 0 || ih <= 0) return 0;
  const double inter = iw * ih;
  const double area_a = (a[2] - a[0]) * (a[3] - a[1]);
  const double area_b = (b[2] - b[0]) * (b[3] - b[1]);
  return inter / (area_a + area_b - inter);
}

namespace {

using ClassKey = std::optional<int>;

// A detection after per-frame matching at one threshold.
struct ScoredDetection {
  double score;
  const std::string* frame_id;
  std::size_t rank;  // position in the frame's capped, score-sorted list
  std::optional<std::size_t> matched_bucket;  // bucket of the matched GT
  bool matched;
  std::optional<std::size_t> own_bucket;
};

struct GtRecord {
  bool matched;
  std::optional<std::size_t> bucket;
};

struct Accumulator {
  std::vector<ScoredDetection> dets;
  std::vector<GtRecord> gts;
};

EvalCell finish_cell(ClassKey cls, double threshold, std::optional<std::size_t> bucket,
                     const Accumulator& acc, int interpolation_points) {
  EvalCell cell;
  cell.class_id = cls;
  cell.threshold = threshold;
  cell.bucket = bucket;
  for (const auto& g : acc.gts) {
    if (bucket && g.bucket != bucket) continue;
    ++cell.num_gt;
  }
  double tp = 0, fp = 0;
  for (const auto& d : acc.dets) {
    bool is_tp = false;
    if (d.matched) {
      if (bucket && d.matched_bucket != bucket) continue;  // ignored
      is_tp = true;
    } else if (bucket && d.own_bucket != bucket) {
      continue;  // ignored
    }
    (is_tp ? tp : fp) += 1;
    if (cell.num_gt > 0) cell.pr.push_back({tp / double(cell.num_gt), tp / (tp + fp)});
  }
  cell.tp = static_cast<std::size_t>(tp);
  cell.fp = static_cast<std::size_t>(fp);
  cell.fn = cell.num_gt - cell.tp;
  if (cell.num_gt > 0) {
    cell.ap = ap_from_pr(cell.pr, interpolation_points);
    cell.ar = tp / double(cell.num_gt);
  }
  return cell;
}

}  // namespace

EvalReport evaluate(std::span<const Detection> detections, std::span<const FrameGroundTruth> gt,
                    const EvalConfig& config) {
  validate(config);
  std::map<std::string, std::size_t> frame_index;
  std::size_t total_gt = 0;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    if (!frame_index.emplace(gt[f].frame_id, f).second)
      throw ValidationError("eval: duplicate ground-truth frame '" + gt[f].frame_id + "'");
    total_gt += gt[f].instances.size();
  }
  if (total_gt == 0) throw ValidationError("eval: ground truth is empty");

  // Per frame: capped detections in score order (ties by input order).
  std::vector<std::vector<const Detection*>> frame_dets(gt.size());
  for (const auto& d : detections) {
    const auto it = frame_index.find(d.frame_id);
    if (it == frame_index.end())
      throw ValidationError("eval: detection references unknown frame '" + d.frame_id + "'");
    if (!(d.score >= 0 && d.score <= 1)) throw ValidationError("eval: score outside [0, 1]");
    if (config.rect_iou && !d.box2d) throw ValidationError("eval: rectangle IoU needs box2d");
    frame_dets[it->second].push_back(&d);
  }
  for (auto& list : frame_dets) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Detection* a, const Detection* b) { return a->score > b->score; });
    if (list.size() > std::size_t(config.max_detections_per_frame))
      list.resize(config.max_detections_per_frame);
  }

  auto key_of = [&](const std::optional<int>& c) -> ClassKey {
    return config.class_agnostic ? ClassKey{} : c;
  };
  std::set<ClassKey> classes;
  for (const auto& f : gt)
    for (const auto& inst : f.instances) classes.insert(key_of(inst.class_id));

  EvalReport report;
  report.config = config;
  for (const double threshold : config.iou_thresholds) {
    std::map<ClassKey, Accumulator> acc;
    for (std::size_t f = 0; f < gt.size(); ++f) {
      for (const ClassKey& cls : classes) {
        std::vector<const Detection*> dets;
        std::vector<double> scores;
        std::vector<std::size_t> ranks;
        for (std::size_t r = 0; r < frame_dets[f].size(); ++r) {
          const Detection* d = frame_dets[f][r];
          if (key_of(d->class_id) != cls) continue;
          dets.push_back(d);
          scores.push_back(d->score);
          ranks.push_back(r);
        }
        std::vector<const InstanceGroundTruth*> gts;
        for (const auto& inst : gt[f].instances)
          if (key_of(inst.class_id) == cls) gts.push_back(&inst);

        Eigen::MatrixXd iou(dets.size(), gts.size());
        for (std::size_t i = 0; i < dets.size(); ++i)
          for (std::size_t j = 0; j < gts.size(); ++j)
            iou(i, j) = config.rect_iou ? rect_iou(*dets[i]->box2d, gts[j]->box2d)
                                        : iou_gravity(dets[i]->box, gts[j]->cut_box);
        const MatchResult m = greedy_match(iou, scores, threshold);

        Accumulator& a = acc[cls];
        for (std::size_t j = 0; j < gts.size(); ++j)
          a.gts.push_back({m.gt_to_detection[j].has_value(),
                           bucket_of(gts[j]->cut_box, config.buckets)});
        for (std::size_t i = 0; i < dets.size(); ++i) {
          ScoredDetection sd{dets[i]->score, &gt[f].frame_id, ranks[i], std::nullopt, false,
                             bucket_of(dets[i]->box, config.buckets)};
          if (const auto g = m.detection_to_gt[i]) {
            sd.matched = true;
            sd.matched_bucket = bucket_of(gts[*g]->cut_box, config.buckets);
          }
          a.dets.push_back(sd);
        }
      }
    }

    std::vector<std::optional<std::size_t>> bucket_keys{std::nullopt};
    for (std::size_t b = 0; b < config.buckets.size(); ++b) bucket_keys.push_back(b);
    for (auto& [cls, a] : acc) {
      std::sort(a.dets.begin(), a.dets.end(), [](const ScoredDetection& x, const ScoredDetection& y) {
        if (x.score != y.score) return x.score > y.score;
        return std::tie(*x.frame_id, x.rank) < std::tie(*y.frame_id, y.rank);
      });
      for (const auto& bk : bucket_keys)
        report.cells.push_back(finish_cell(cls, threshold, bk, a, config.interpolation_points));
    }
    for (const auto& bk : bucket_keys) {
      EvalSummary s;
      s.threshold = threshold;
      s.bucket = bk;
      double ap = 0, ar = 0;
      for (const auto& cell : report.cells) {
        if (cell.threshold != threshold || cell.bucket != bk || cell.num_gt == 0) continue;
        ap += cell.ap;
        ar += cell.ar;
        ++s.num_classes;
      }
      if (s.num_classes > 0) {
        s.ap = ap / s.num_classes;
        s.ar = ar / s.num_classes;
      }
      report.summary.push_back(s);
    }
  }
  return report;
}

}  // namespace cubify
