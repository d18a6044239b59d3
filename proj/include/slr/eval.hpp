#pragma once

#include <string>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/dataset.hpp"
#include "slr/net.hpp"
#include "slr/tensor.hpp"

namespace slr {

struct EvalConfig {
    double tau_cov = 0.5;        // box coverage threshold for a detection
    int min_component_area = 9;  // false-positive component area floor, px
    double danger_radius = 15.0; // meters
};

void validate_eval_config(const EvalConfig& cfg);

struct DetectionCounts {
    long tp = 0, fp = 0, fn = 0;

    void add(const DetectionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
    }
};

struct PrfScores {
    double pr = 0.0, re = 0.0, f1 = 0.0;
};

// Zero-safe precision / recall / harmonic F1.
PrfScores prf(const DetectionCounts& counts);

// Ground-truth edge rows per column; -1 marks columns without coverage.
// Derived from the dense ground truth so that a perfect prediction scores
// exactly zero.
std::vector<int> gt_edge_rows(const Grid<uint8_t>& gt, const EdgeRowMap& edge_rows);

struct EdgeAccuracy {
    double abs_sum = 0.0;
    long columns = 0;

    double mean() const { return columns == 0 ? 0.0 : abs_sum / static_cast<double>(columns); }
    void add(const EdgeAccuracy& o) {
        abs_sum += o.abs_sum;
        columns += o.columns;
    }
};

// Per covered column, the predicted boundary is the first row from the top
// where the prediction turns water and stays water through the ground-truth
// edge neighborhood (2 rows); columns that never do are penalized with the
// distance from the ground-truth edge to the image bottom.
EdgeAccuracy water_edge_accuracy(const Grid<uint8_t>& pred, const std::vector<int>& gt_rows);

struct DetectionResult {
    DetectionCounts overall;
    DetectionCounts danger;
    bool has_danger = false;
};

// Coverage-thresholded TP/FN per ground-truth box; one FP per 4-connected
// predicted-obstacle component on ground-truth water outside all boxes with
// area >= the configured floor. Danger-zone membership: boxes by the
// distance at their bottom-center pixel, FP components by their centroid.
DetectionResult detect_obstacles(const Grid<uint8_t>& pred, const std::vector<ObstacleBox>& boxes,
                                 const Grid<uint8_t>& gt, const EvalConfig& cfg,
                                 const Grid<double>* distance);

struct SegLayerStats {
    long long inter = 0;
    long long uni = 0;

    double iou() const { return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni); }
};

struct SegAccum {
    SegLayerStats cls[kNumClasses];
    long long correct = 0;
    long long total = 0;

    void add(const Grid<uint8_t>& pred, const Grid<uint8_t>& gt);
    double accuracy() const { return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct ImageMetrics {
    std::string id;
    double a_w = 0.0;
    DetectionCounts overall;
    DetectionCounts danger;
};

struct MetricsReport {
    double a_w = 0.0;
    DetectionCounts overall, danger;
    PrfScores overall_scores, danger_scores;
    double iou[kNumClasses] = {0, 0, 0};
    double accuracy = 0.0;
    bool has_danger = false;
    std::vector<ImageMetrics> per_image;
};

// Dataset-level evaluation of precomputed class-id predictions (one per
// scene, aligned by index).
MetricsReport evaluate_predictions(const std::vector<Scene>& scenes,
                                   const std::vector<Grid<uint8_t>>& preds, const EvalConfig& cfg);

// Runs the model on every scene (argmax over class probabilities, ties to
// the lowest class id) and aggregates the full report.
MetricsReport evaluate(const ModelParams& params, const std::vector<Scene>& scenes,
                       const EvalConfig& cfg, int threads);

Grid<uint8_t> argmax_classes(const Field<double>& probs);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& run, const MetricsReport& report);

}  // namespace slr
