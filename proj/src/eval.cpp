#include "slr/eval.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "slr/errors.hpp"
#include "slr/parallel.hpp"

namespace slr {

using nlohmann::json;

namespace {
constexpr int kEdgeNeighborhood = 2;  // rows below the GT edge a boundary must persist through
}

void validate_eval_config(const EvalConfig& cfg) {
    if (!(cfg.tau_cov > 0.0 && cfg.tau_cov <= 1.0)) throw ConfigError("tau_cov must be in (0,1]");
    if (cfg.min_component_area < 1) throw ConfigError("min_component_area must be >= 1");
    if (!(cfg.danger_radius > 0.0)) throw ConfigError("danger_radius must be > 0");
}

PrfScores prf(const DetectionCounts& c) {
    PrfScores s;
    s.pr = (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    s.re = (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    s.f1 = (s.pr + s.re) == 0.0 ? 0.0 : 2.0 * s.pr * s.re / (s.pr + s.re);
    return s;
}

std::vector<int> gt_edge_rows(const Grid<uint8_t>& gt, const EdgeRowMap& edge_rows) {
    std::vector<int> rows(gt.width, -1);
    for (int x = 0; x < gt.width; ++x) {
        if (!edge_rows.covered[x]) continue;
        for (int y = 0; y < gt.height; ++y) {
            if (gt.at(y, x) == kWater) {
                rows[x] = y;
                break;
            }
        }
    }
    return rows;
}

EdgeAccuracy water_edge_accuracy(const Grid<uint8_t>& pred, const std::vector<int>& gt_rows) {
    if (static_cast<int>(gt_rows.size()) != pred.width) {
        throw ShapeError("water_edge_accuracy: edge row map width mismatch");
    }
    EdgeAccuracy acc;
    const int H = pred.height;
    for (int x = 0; x < pred.width; ++x) {
        const int gt_row = gt_rows[x];
        if (gt_row < 0) continue;
        int found = -1;
        const int hold_until = std::min(H - 1, gt_row + kEdgeNeighborhood);
        int run_start = -1;
        for (int y = 0; y < H; ++y) {
            if (pred.at(y, x) == kWater) {
                if (run_start < 0) run_start = y;
                // A boundary at run_start is accepted once the run persists
                // through the GT edge neighborhood (or begins below it).
                if (y >= hold_until || run_start > hold_until) {
                    found = run_start;
                    break;
                }
            } else {
                run_start = -1;
            }
        }
        if (found < 0) {
            acc.abs_sum += static_cast<double>(H - gt_row);  // bottom penalty
        } else {
            acc.abs_sum += std::abs(found - gt_row);
        }
        acc.columns += 1;
    }
    return acc;
}

DetectionResult detect_obstacles(const Grid<uint8_t>& pred, const std::vector<ObstacleBox>& boxes,
                                 const Grid<uint8_t>& gt, const EvalConfig& cfg,
                                 const Grid<double>* distance) {
    validate_eval_config(cfg);
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("detect_obstacles: prediction/ground truth shape mismatch");
    }
    const int H = pred.height, W = pred.width;
    DetectionResult result;
    result.has_danger = distance != nullptr;

    auto in_zone_px = [&](int y, int x) {
        if (!distance) return false;
        const double d = distance->at(y, x);
        return std::isfinite(d) && d < cfg.danger_radius;
    };

    // Coverage-thresholded detections.
    for (const auto& b : boxes) {
        long hit = 0;
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) hit += pred.at(y, x) == kObstacle;
        const double frac = static_cast<double>(hit) / static_cast<double>((b.x1 - b.x0) * (b.y1 - b.y0));
        const bool detected = frac >= cfg.tau_cov;
        const bool zone = in_zone_px(b.y1 - 1, (b.x0 + b.x1 - 1) / 2);
        if (detected) {
            ++result.overall.tp;
            if (zone) ++result.danger.tp;
        } else {
            ++result.overall.fn;
            if (zone) ++result.danger.fn;
        }
    }

    // False positives: 4-connected components of predicted obstacle pixels
    // on ground-truth water outside every box.
    Mask fp_mask(H, W, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            fp_mask.at(y, x) = (pred.at(y, x) == kObstacle && gt.at(y, x) == kWater) ? 1 : 0;
    for (const auto& b : boxes) {
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) fp_mask.at(y, x) = 0;
    }

    Grid<int> label(H, W, 0);
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!fp_mask.at(y, x) || label.at(y, x)) continue;
            long area = 0;
            long long sum_x = 0, sum_y = 0;
            stack.push_back({y, x});
            label.at(y, x) = 1;
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                ++area;
                sum_x += cx;
                sum_y += cy;
                const int ny[4] = {cy - 1, cy + 1, cy, cy};
                const int nx[4] = {cx, cx, cx - 1, cx + 1};
                for (int k = 0; k < 4; ++k) {
                    if (ny[k] < 0 || ny[k] >= H || nx[k] < 0 || nx[k] >= W) continue;
                    if (!fp_mask.at(ny[k], nx[k]) || label.at(ny[k], nx[k])) continue;
                    label.at(ny[k], nx[k]) = 1;
                    stack.push_back({ny[k], nx[k]});
                }
            }
            if (area < cfg.min_component_area) continue;
            ++result.overall.fp;
            const int cyc = static_cast<int>(std::lround(static_cast<double>(sum_y) / area));
            const int cxc = static_cast<int>(std::lround(static_cast<double>(sum_x) / area));
            if (in_zone_px(std::clamp(cyc, 0, H - 1), std::clamp(cxc, 0, W - 1))) ++result.danger.fp;
        }
    }
    return result;
}

void SegAccum::add(const Grid<uint8_t>& pred, const Grid<uint8_t>& gt) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("segmentation metrics: shape mismatch");
    }
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const uint8_t p = pred.data[i];
        const uint8_t g = gt.data[i];
        ++total;
        if (p == g) ++correct;
        for (int c = 0; c < kNumClasses; ++c) {
            const bool in_p = p == c, in_g = g == c;
            if (in_p && in_g) ++cls[c].inter;
            if (in_p || in_g) ++cls[c].uni;
        }
    }
}

Grid<uint8_t> argmax_classes(const Field<double>& probs) {
    Grid<uint8_t> ids(probs.height, probs.width);
    for (int y = 0; y < probs.height; ++y) {
        for (int x = 0; x < probs.width; ++x) {
            const double* p = probs.px(y, x);
            int best = 0;
            for (int c = 1; c < probs.channels; ++c)
                if (p[c] > p[best]) best = c;
            ids.at(y, x) = static_cast<uint8_t>(best);
        }
    }
    return ids;
}

MetricsReport evaluate_predictions(const std::vector<Scene>& scenes,
                                   const std::vector<Grid<uint8_t>>& preds, const EvalConfig& cfg) {
    if (scenes.size() != preds.size()) throw ShapeError("evaluate: prediction count mismatch");
    MetricsReport report;
    report.has_danger = true;
    EdgeAccuracy edge_total;
    SegAccum seg;
    for (size_t i = 0; i < scenes.size(); ++i) {
        const Scene& s = scenes[i];
        const bool has_dist = !s.distance.data.empty();
        if (!has_dist) report.has_danger = false;
        EdgeAccuracy ea = water_edge_accuracy(preds[i], gt_edge_rows(s.dense_gt, s.edge_rows));
        DetectionResult det = detect_obstacles(preds[i], s.ann.boxes, s.dense_gt, cfg,
                                               has_dist ? &s.distance : nullptr);
        seg.add(preds[i], s.dense_gt);
        edge_total.add(ea);
        report.overall.add(det.overall);
        report.danger.add(det.danger);
        ImageMetrics im;
        im.id = s.id;
        im.a_w = ea.mean();
        im.overall = det.overall;
        im.danger = det.danger;
        report.per_image.push_back(std::move(im));
    }
    report.a_w = edge_total.mean();
    report.overall_scores = prf(report.overall);
    report.danger_scores = prf(report.danger);
    for (int c = 0; c < kNumClasses; ++c) report.iou[c] = seg.cls[c].iou();
    report.accuracy = seg.accuracy();
    return report;
}

MetricsReport evaluate(const ModelParams& params, const std::vector<Scene>& scenes,
                       const EvalConfig& cfg, int threads) {
    std::vector<Grid<uint8_t>> preds(scenes.size());
    parallel_for(static_cast<int>(scenes.size()), threads, [&](int i) {
        ForwardPass fp = forward(params, make_net_input(scenes[i].image, params.cfg, scenes[i].ann.horizon));
        preds[i] = argmax_classes(fp.probs);
    });
    return evaluate_predictions(scenes, preds, cfg);
}

std::string metrics_to_json(const MetricsReport& r) {
    json j;
    j["a_w"] = r.a_w;
    j["overall"] = {{"tp", r.overall.tp}, {"fp", r.overall.fp}, {"fn", r.overall.fn},
                    {"pr", r.overall_scores.pr}, {"re", r.overall_scores.re},
                    {"f1", r.overall_scores.f1}};
    if (r.has_danger) {
        j["danger_zone"] = {{"tp", r.danger.tp}, {"fp", r.danger.fp}, {"fn", r.danger.fn},
                            {"pr", r.danger_scores.pr}, {"re", r.danger_scores.re},
                            {"f1", r.danger_scores.f1}};
    }
    j["iou"] = {{"water", r.iou[kWater]}, {"sky", r.iou[kSky]}, {"obstacle", r.iou[kObstacle]}};
    j["accuracy"] = r.accuracy;
    json per_image = json::array();
    for (const auto& im : r.per_image) {
        per_image.push_back({{"id", im.id}, {"a_w", im.a_w},
                             {"tp", im.overall.tp}, {"fp", im.overall.fp}, {"fn", im.overall.fn},
                             {"danger_tp", im.danger.tp}, {"danger_fp", im.danger.fp},
                             {"danger_fn", im.danger.fn}});
    }
    j["per_image"] = per_image;
    return j.dump(2);
}

std::string metrics_csv_header() {
    return "run,a_w,tp,fp,fn,pr,re,f1,danger_tp,danger_fp,danger_fn,danger_pr,danger_re,danger_f1,"
           "iou_water,iou_sky,iou_obstacle,accuracy";
}

std::string metrics_csv_row(const std::string& run, const MetricsReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << run << "," << r.a_w << "," << r.overall.tp << "," << r.overall.fp << "," << r.overall.fn
       << "," << r.overall_scores.pr << "," << r.overall_scores.re << "," << r.overall_scores.f1
       << "," << r.danger.tp << "," << r.danger.fp << "," << r.danger.fn << ","
       << r.danger_scores.pr << "," << r.danger_scores.re << "," << r.danger_scores.f1 << ","
       << r.iou[kWater] << "," << r.iou[kSky] << "," << r.iou[kObstacle] << "," << r.accuracy;
    return os.str();
}

}  // namespace slr
