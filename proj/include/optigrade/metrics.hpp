#pragma once
// metrics.hpp - detection evaluation: greedy IoU matching, per-class
// average precision with the right-max precision envelope, best-F1
// threshold search, and mean absolute count error.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string_view>
#include <vector>

#include "optigrade/common.hpp"
#include "optigrade/dataset.hpp"

namespace optigrade::metrics {

using dataset::BoundingBox;

struct Detection {
    BoundingBox box;
    double confidence = 0.0;

    void validate() const {
        box.validate();
        if (!(confidence >= 0.0 && confidence <= 1.0))
            throw InvalidArgument("confidence must lie in [0, 1]");
    }
};

struct EvalConfig {
    double iou_threshold = 0.5;

    void validate() const {
        if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
            throw InvalidArgument("IoU threshold must lie in (0, 1)");
    }
};

/// Detections and ground truth of a single image, any classes mixed.
struct ImageEval {
    std::vector<Detection> detections;
    std::vector<BoundingBox> ground_truth;
};

struct MetricsReport {
    std::map<int, double> per_class_ap;  ///< classes with ground truth only
    double map = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double best_threshold = 0.0;
    double count_error = 0.0;
};

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

/// Intersection over union of two boxes in the same normalized frame.
/// Areas are derived from the same edge arithmetic as the intersection
/// so identical boxes give exactly 1.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    double ix = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
    double iy = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    double inter = ix * iy;
    double area_a = (a.right() - a.left()) * (a.bottom() - a.top());
    double area_b = (b.right() - b.left()) * (b.bottom() - b.top());
    double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Greedy one-to-one matching for a single image and class: detections in
/// descending confidence order (ties keep input order) claim the unmatched
/// ground-truth box of highest IoU at or above the threshold. Returns
/// true/false flags aligned with the input detection order.
inline std::vector<char> match_detections(const std::vector<Detection>& detections,
                                          const std::vector<BoundingBox>& ground_truth,
                                          const EvalConfig& cfg = {}) {
    cfg.validate();
    std::vector<int> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return detections[a].confidence > detections[b].confidence;
    });

    std::vector<char> flags(detections.size(), 0);
    std::vector<char> taken(ground_truth.size(), 0);
    for (int idx : order) {
        int best = -1;
        double best_v = -1.0;
        for (size_t g = 0; g < ground_truth.size(); ++g) {
            if (taken[g]) continue;
            double v = iou(detections[idx].box, ground_truth[g]);
            if (v >= cfg.iou_threshold && v > best_v) {  // IoU ties keep the first box
                best = int(g);
                best_v = v;
            }
        }
        if (best >= 0) {
            taken[best] = 1;
            flags[idx] = 1;
        }
    }
    return flags;
}

namespace detail_metrics {

/// (confidence, is_true_positive) records pooled across images, plus the
/// ground-truth count, for one class.
struct PooledClass {
    std::vector<std::pair<double, char>> flags;  // in pooled confidence order
    long gt_count = 0;
};

inline std::vector<Detection> class_detections(const std::vector<Detection>& dets, int cls) {
    std::vector<Detection> out;
    for (const auto& d : dets)
        if (d.box.class_id == cls) out.push_back(d);
    return out;
}

inline std::vector<BoundingBox> class_boxes(const std::vector<BoundingBox>& boxes, int cls) {
    std::vector<BoundingBox> out;
    for (const auto& b : boxes)
        if (b.class_id == cls) out.push_back(b);
    return out;
}

/// Matches one class across all images and pools the per-detection flags.
inline PooledClass pool_class(const std::vector<ImageEval>& images, int cls,
                              const EvalConfig& cfg) {
    PooledClass pooled;
    for (const auto& img : images) {
        auto dets = class_detections(img.detections, cls);
        auto gts = class_boxes(img.ground_truth, cls);
        pooled.gt_count += long(gts.size());
        auto flags = match_detections(dets, gts, cfg);
        for (size_t i = 0; i < dets.size(); ++i)
            pooled.flags.emplace_back(dets[i].confidence, flags[i]);
    }
    std::stable_sort(pooled.flags.begin(), pooled.flags.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    return pooled;
}

/// Area under the precision-recall curve with the precision envelope made
/// non-increasing from the right (all-point interpolation).
inline double ap_from_pooled(const PooledClass& pooled) {
    if (pooled.gt_count == 0) return 0.0;
    long tp = 0, fp = 0;
    std::vector<double> precision, recall;
    precision.reserve(pooled.flags.size());
    for (const auto& [conf, is_tp] : pooled.flags) {
        if (is_tp)
            ++tp;
        else
            ++fp;
        precision.push_back(double(tp) / double(tp + fp));
        recall.push_back(double(tp) / double(pooled.gt_count));
    }
    double ap = 0.0;
    double envelope = 0.0;
    double next_recall = 0.0;
    for (size_t i = precision.size(); i-- > 0;) {
        envelope = std::max(envelope, precision[i]);
        double r_prev = i == 0 ? 0.0 : recall[i - 1];
        if (i + 1 == precision.size()) next_recall = recall[i];
        ap += envelope * (next_recall - r_prev);
        next_recall = r_prev;
    }
    return ap;
}

inline std::set<int> classes_present(const std::vector<ImageEval>& images) {
    std::set<int> classes;
    for (const auto& img : images) {
        for (const auto& b : img.ground_truth) classes.insert(b.class_id);
        for (const auto& d : img.detections) classes.insert(d.box.class_id);
    }
    return classes;
}

}  // namespace detail_metrics

/// Average precision for one class, detections pooled across images.
inline double average_precision(const std::vector<ImageEval>& images, int class_id,
                                const EvalConfig& cfg = {}) {
    cfg.validate();
    return detail_metrics::ap_from_pooled(detail_metrics::pool_class(images, class_id, cfg));
}

struct F1Result {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double threshold = 0.0;
};

/// Scans every unique confidence (plus 0) as a candidate threshold over
/// the class-and-image pooled detections and returns the F1 maximizer,
/// ties resolved toward the higher threshold. A detection counts when its
/// confidence is at or above the threshold.
inline F1Result f1_best_threshold(const std::vector<ImageEval>& images,
                                  const EvalConfig& cfg = {}) {
    cfg.validate();
    std::vector<std::pair<double, char>> flags;  // pooled over classes and images
    long total_gt = 0;
    for (int cls : detail_metrics::classes_present(images)) {
        auto pooled = detail_metrics::pool_class(images, cls, cfg);
        total_gt += pooled.gt_count;
        flags.insert(flags.end(), pooled.flags.begin(), pooled.flags.end());
    }

    F1Result best;
    if (flags.empty()) return best;

    std::sort(flags.begin(), flags.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> candidates;
    for (const auto& [conf, tp] : flags) candidates.push_back(conf);
    candidates.push_back(0.0);
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // walk candidates from the highest down; the prefix of flags with
    // confidence >= threshold grows monotonically
    bool have_best = false;
    size_t prefix = 0;
    long tp = 0;
    for (double threshold : candidates) {
        while (prefix < flags.size() && flags[prefix].first >= threshold) {
            if (flags[prefix].second) ++tp;
            ++prefix;
        }
        double precision = prefix > 0 ? double(tp) / double(prefix) : 0.0;
        double recall = total_gt > 0 ? double(tp) / double(total_gt) : 0.0;
        double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                             : 0.0;
        if (!have_best || f1 > best.f1) {  // ties keep the higher threshold
            best = {f1, precision, recall, threshold};
            have_best = true;
        }
    }
    return best;
}

/// Mean absolute difference between detection and label counts per image,
/// classes pooled. Counts must already reflect the confidence threshold.
inline double count_error(const std::vector<long>& detection_counts,
                          const std::vector<long>& label_counts) {
    if (detection_counts.size() != label_counts.size())
        throw InvalidArgument("count error needs matching image sets");
    if (detection_counts.empty())
        throw InvalidArgument("count error is undefined for an empty image set");
    double acc = 0.0;
    for (size_t i = 0; i < detection_counts.size(); ++i)
        acc += std::abs(double(detection_counts[i]) - double(label_counts[i]));
    return acc / double(detection_counts.size());
}

/// Per-class variant of the count error, keyed by class id. The pooled
/// single-figure count_error is the reported quantity; this exists for
/// drill-down.
inline std::map<int, double> per_class_count_error(const std::vector<ImageEval>& images,
                                                   double threshold) {
    if (images.empty()) throw InvalidArgument("count error is undefined for an empty image set");
    std::map<int, double> acc;
    for (int cls : detail_metrics::classes_present(images)) acc[cls] = 0.0;
    for (const auto& img : images) {
        std::map<int, long> d, l;
        for (const auto& det : img.detections)
            if (det.confidence >= threshold) ++d[det.box.class_id];
        for (const auto& g : img.ground_truth) ++l[g.class_id];
        for (auto& [cls, sum] : acc) sum += std::abs(double(d[cls]) - double(l[cls]));
    }
    for (auto& [cls, sum] : acc) sum /= double(images.size());
    return acc;
}

/// Full evaluation: per-class AP and mAP over classes with ground truth,
/// best-F1 operating point, and the count error at that threshold.
inline MetricsReport evaluate(const std::vector<ImageEval>& images, const EvalConfig& cfg = {}) {
    cfg.validate();
    MetricsReport report;

    double ap_sum = 0.0;
    int ap_classes = 0;
    for (int cls : detail_metrics::classes_present(images)) {
        auto pooled = detail_metrics::pool_class(images, cls, cfg);
        if (pooled.gt_count == 0) continue;  // class absent from ground truth
        double ap = detail_metrics::ap_from_pooled(pooled);
        report.per_class_ap[cls] = ap;
        ap_sum += ap;
        ++ap_classes;
    }
    report.map = ap_classes > 0 ? ap_sum / double(ap_classes) : 0.0;

    F1Result best = f1_best_threshold(images, cfg);
    report.f1 = best.f1;
    report.precision = best.precision;
    report.recall = best.recall;
    report.best_threshold = best.threshold;

    if (!images.empty()) {
        std::vector<long> det_counts, label_counts;
        for (const auto& img : images) {
            long d = 0;
            for (const auto& det : img.detections)
                if (det.confidence >= best.threshold) ++d;
            det_counts.push_back(d);
            label_counts.push_back(long(img.ground_truth.size()));
        }
        report.count_error = count_error(det_counts, label_counts);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Prediction files: "class cx cy w h conf", one detection per line
// ---------------------------------------------------------------------------

inline std::vector<Detection> parse_predictions(std::string_view text) {
    std::vector<Detection> dets;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto f = dataset::detail_dataset::parse_fields(line, line_no, 6);
        if (f[0] < 0.0 || f[0] != std::floor(f[0]))
            throw ParseError(line_no, "class id must be a non-negative integer");
        Detection det{{int(f[0]), f[1], f[2], f[3], f[4]}, f[5]};
        try {
            det.validate();
        } catch (const InvalidArgument& e) {
            throw ParseError(line_no, e.what());
        }
        dets.push_back(det);
    }
    return dets;
}

inline std::string write_predictions(const std::vector<Detection>& dets) {
    std::string out;
    for (const auto& d : dets) {
        out += std::to_string(d.box.class_id);
        for (double v : {d.box.cx, d.box.cy, d.box.w, d.box.h, d.confidence}) {
            out += ' ';
            out += format_fixed6(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace optigrade::metrics
