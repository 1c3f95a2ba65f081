#include "riskmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskmm/errors.hpp"

namespace riskmm::metrics {

namespace {

double cross(const Vec2& u, const Vec2& v) { return u.x * v.y - u.y * v.x; }

double polygon_area(std::span<const Vec2> poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * twice;
}

std::vector<Vec2> ccw_corners(const OrientedBox& box) {
  const auto c = box.corners();
  std::vector<Vec2> poly(c.begin(), c.end());
  if (polygon_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

std::vector<Vec2> clip_against_edge(const std::vector<Vec2>& subject,
                                    const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  const std::size_t n = subject.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = subject[i];
    const Vec2& q = subject[(i + 1) % n];
    const double dp = cross(b - a, p - a);
    const double dq = cross(b - a, q - a);
    if (dp >= 0.0) out.push_back(p);
    if ((dp >= 0.0) != (dq >= 0.0)) out.push_back(p + (q - p) * (dp / (dp - dq)));
  }
  return out;
}

std::vector<int> score_descending_order(const DetectionSet& dets) {
  std::vector<int> order(dets.boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return dets.boxes[a].score > dets.boxes[b].score;
  });
  return order;
}

}  // namespace

void DetectionSet::validate() const {
  for (const ScoredBox& d : boxes) {
    if (d.score < 0.0 || d.score > 1.0 || !std::isfinite(d.score))
      throw ConfigError("detection scores must lie in [0, 1]");
    if (d.box.length <= 0.0 || d.box.width <= 0.0)
      throw GeometryError("detection box sizes must be positive");
  }
}

double oriented_iou(const OrientedBox& a, const OrientedBox& b) {
  std::vector<Vec2> poly = ccw_corners(a);
  const std::vector<Vec2> clipper = ccw_corners(b);
  for (std::size_t i = 0; i < clipper.size() && !poly.empty(); ++i)
    poly = clip_against_edge(poly, clipper[i], clipper[(i + 1) % clipper.size()]);
  const double inter = poly.empty() ? 0.0 : std::abs(polygon_area(poly));
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

MatchResult match_detections(const DetectionSet& dets,
                             std::span<const OrientedBox> gts,
                             double iou_threshold) {
  dets.validate();
  MatchResult result;
  std::vector<bool> gt_used(gts.size(), false);
  for (int det : score_descending_order(dets)) {
    int best_gt = -1;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      const double iou = oriented_iou(dets.boxes[det].box, gts[g]);
      if (iou >= best_iou && (best_gt < 0 || iou > best_iou)) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[best_gt] = true;
      result.tp.push_back({det, best_gt, best_iou, 0.0});
    } else {
      result.fp.push_back(det);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g)
    if (!gt_used[g]) result.fn.push_back(static_cast<int>(g));
  return result;
}

double average_precision(const DetectionSet& dets,
                         std::span<const OrientedBox> gts,
                         double iou_threshold) {
  dets.validate();
  if (gts.empty()) return dets.boxes.empty() ? 1.0 : 0.0;
  if (dets.boxes.empty()) return 0.0;

  std::vector<bool> gt_used(gts.size(), false);
  std::vector<double> precision, recall;
  int tp = 0, seen = 0;
  for (int det : score_descending_order(dets)) {
    int best_gt = -1;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      const double iou = oriented_iou(dets.boxes[det].box, gts[g]);
      if (iou >= best_iou && (best_gt < 0 || iou > best_iou)) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[best_gt] = true;
      ++tp;
    }
    ++seen;
    precision.push_back(static_cast<double>(tp) / seen);
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double epa(const MatchResult& match, double tau, double alpha) {
  if (match.num_gt() == 0)
    throw UndefinedMetric("EPA undefined without ground-truth objects");
  int hits = 0;
  for (const TruePositive& t : match.tp)
    if (t.min_fde < tau) ++hits;
  return (hits - alpha * match.num_fp()) / static_cast<double>(match.num_gt());
}

double occupancy_auc(const OccupancyGrid& pred, const OccupancyGrid& gt) {
  if (pred.steps.size() != gt.steps.size() || pred.steps.empty())
    throw ShapeError("occupancy grids must have matching horizons");
  long positives = 0;
  for (std::size_t t = 0; t < gt.steps.size(); ++t) {
    if (pred.steps[t].rows() != gt.steps[t].rows() ||
        pred.steps[t].cols() != gt.steps[t].cols())
      throw ShapeError("occupancy grids must have matching shapes");
    for (Eigen::Index i = 0; i < gt.steps[t].size(); ++i) {
      const double g = gt.steps[t](i);
      if (g != 0.0 && g != 1.0)
        throw NumericError("ground-truth occupancy must be binary");
      if (g == 1.0) ++positives;
    }
  }
  if (positives == 0)
    throw UndefinedMetric("PR-AUC undefined without positive ground-truth cells");

  std::vector<double> recalls, precisions;
  for (int i = 99; i >= 0; --i) {
    const double theta = i / 99.0;
    long tp = 0, fp = 0;
    for (std::size_t t = 0; t < pred.steps.size(); ++t) {
      for (Eigen::Index k = 0; k < pred.steps[t].size(); ++k) {
        if (pred.steps[t](k) >= theta) {
          if (gt.steps[t](k) == 1.0) ++tp;
          else ++fp;
        }
      }
    }
    if (tp + fp == 0) continue;  // threshold selects nothing
    const double recall = static_cast<double>(tp) / positives;
    if (!recalls.empty() && recall == recalls.back()) continue;
    recalls.push_back(recall);
    precisions.push_back(static_cast<double>(tp) / (tp + fp));
  }
  double auc = 0.0, prev_recall = 0.0, prev_precision = precisions.front();
  for (std::size_t i = 0; i < recalls.size(); ++i) {
    auc += (recalls[i] - prev_recall) * 0.5 * (precisions[i] + prev_precision);
    prev_recall = recalls[i];
    prev_precision = precisions[i];
  }
  return auc;
}

SoftIouReport soft_iou(const OccupancyGrid& pred, const OccupancyGrid& gt,
                       SoftIouMode mode) {
  if (pred.steps.size() != gt.steps.size() || pred.steps.empty())
    throw ShapeError("occupancy grids must have matching horizons");
  SoftIouReport report;
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.steps.size(); ++t) {
    if (pred.steps[t].rows() != gt.steps[t].rows() ||
        pred.steps[t].cols() != gt.steps[t].cols())
      throw ShapeError("occupancy grids must have matching shapes");
    const double inter = pred.steps[t].cwiseProduct(gt.steps[t]).sum();
    const double both = pred.steps[t].sum() + gt.steps[t].sum();
    const double den =
        mode == SoftIouMode::kAsPrinted ? both + inter : both - inter;
    if (den == 0.0) {
      report.zero_denominator_steps.push_back(static_cast<int>(t));
      continue;
    }
    sum += inter / den;
  }
  report.value = sum / static_cast<double>(pred.steps.size());
  return report;
}

double ade(const PlannedTrajectory& planned, const Trajectory& gt_future) {
  if (gt_future.empty() || planned.points.size() != gt_future.size() + 1)
    throw ShapeError("trajectory lengths must match over the future horizon");
  double sum = 0.0;
  for (std::size_t k = 0; k < gt_future.size(); ++k)
    sum += std::hypot(planned.points[k + 1].x - gt_future[k].x,
                      planned.points[k + 1].y - gt_future[k].y);
  return sum / static_cast<double>(gt_future.size());
}

double collision_rate(std::span<const ScenarioPlan> scenarios, double threshold) {
  if (scenarios.empty())
    throw UndefinedMetric("collision rate undefined over zero scenarios");
  int collided = 0;
  for (const ScenarioPlan& sc : scenarios) {
    bool hit = false;
    for (const Trajectory& other : sc.others) {
      if (other.size() != sc.ego.points.size())
        throw ShapeError("collision rate requires synchronized horizons");
      for (std::size_t k = 0; k < other.size() && !hit; ++k) {
        const double d = std::hypot(sc.ego.points[k].x - other[k].x,
                                    sc.ego.points[k].y - other[k].y);
        hit = d < threshold;
      }
      if (hit) break;
    }
    if (hit) ++collided;
  }
  return static_cast<double>(collided) / static_cast<double>(scenarios.size());
}

}  // namespace riskmm::metrics
