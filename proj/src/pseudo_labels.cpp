#include "slr/pseudo_labels.hpp"

#include <algorithm>
#include <cmath>

#include "slr/errors.hpp"

namespace slr {

namespace {
constexpr double kMassEps = 1e-6;
}

void validate_pseudo_config(const PseudoLabelConfig& cfg) {
    if (!(cfg.beta_s > 0.0)) throw ConfigError("beta_s must be > 0");
    if (!(cfg.w > 0.0 && cfg.w <= 1.0)) throw ConfigError("w must be in (0,1]");
}

GridRect box_footprint(const ObstacleBox& box, int stride, int grid_h, int grid_w) {
    GridRect r;
    r.x0 = std::clamp(box.x0 / stride, 0, grid_w);
    r.y0 = std::clamp(box.y0 / stride, 0, grid_h);
    r.x1 = std::clamp((box.x1 + stride - 1) / stride, 0, grid_w);
    r.y1 = std::clamp((box.y1 + stride - 1) / stride, 0, grid_h);
    return r;
}

Field<double> downsample_probs(const Field<double>& probs, int stride) {
    if (stride < 1) throw ConfigError("downsample stride must be >= 1");
    if (stride == 1) return probs;
    const int h = (probs.height + stride - 1) / stride;
    const int w = (probs.width + stride - 1) / stride;
    Field<double> out(h, w, probs.channels, 0.0);
    for (int cy = 0; cy < h; ++cy) {
        const int y0 = cy * stride;
        const int y1 = std::min(y0 + stride, probs.height);
        for (int cx = 0; cx < w; ++cx) {
            const int x0 = cx * stride;
            const int x1 = std::min(x0 + stride, probs.width);
            double* dst = out.px(cy, cx);
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    const double* src = probs.px(y, x);
                    for (int c = 0; c < probs.channels; ++c) dst[c] += src[c];
                }
            }
            const double inv = 1.0 / ((y1 - y0) * (x1 - x0));
            for (int c = 0; c < probs.channels; ++c) dst[c] *= inv;
        }
    }
    return out;
}

PrototypeSet class_prototypes(const Field<double>& features, const Field<double>& probs_ds,
                              const std::vector<ObstacleBox>& boxes, int stride) {
    if (probs_ds.height != features.height || probs_ds.width != features.width ||
        probs_ds.channels != kNumClasses) {
        throw ShapeError("class_prototypes: probability grid does not match feature grid");
    }
    const int h = features.height, w = features.width, C = features.channels;

    auto pool = [&](auto&& weight_at) {
        Prototype p;
        p.v.assign(C, 0.0);
        double mass = 0.0;
        for (int cy = 0; cy < h; ++cy) {
            for (int cx = 0; cx < w; ++cx) {
                const double wt = weight_at(cy, cx);
                if (wt == 0.0) continue;
                mass += wt;
                const double* f = features.px(cy, cx);
                for (int c = 0; c < C; ++c) p.v[c] += wt * f[c];
            }
        }
        if (mass >= kMassEps) {
            for (double& v : p.v) v /= mass;
            p.valid = true;
        } else {
            p.v.assign(C, 0.0);
        }
        return p;
    };

    std::vector<GridRect> rects;
    rects.reserve(boxes.size());
    for (const auto& b : boxes) rects.push_back(box_footprint(b, stride, h, w));
    auto in_any_rect = [&](int cy, int cx) {
        for (const auto& r : rects)
            if (r.contains(cy, cx)) return true;
        return false;
    };

    PrototypeSet set;
    set.water = pool([&](int cy, int cx) { return probs_ds.at(cy, cx, kWater); });
    set.sky = pool([&](int cy, int cx) { return probs_ds.at(cy, cx, kSky); });
    set.static_obstacle = pool([&](int cy, int cx) {
        return in_any_rect(cy, cx) ? 0.0 : probs_ds.at(cy, cx, kObstacle);
    });
    for (const auto& r : rects) {
        set.boxes.push_back(pool([&](int cy, int cx) {
            return r.contains(cy, cx) ? probs_ds.at(cy, cx, kObstacle) : 0.0;
        }));
    }

    bool any = set.water.valid || set.sky.valid || set.static_obstacle.valid;
    for (const auto& p : set.boxes) any = any || p.valid;
    if (!any) throw PrototypeFailure("no class prototype has supporting mass");
    return set;
}

Grid<double> similarity_map(const Field<double>& features, const Prototype& proto) {
    const int h = features.height, w = features.width, C = features.channels;
    Grid<double> s(h, w, 0.0);
    if (!proto.valid) {
        s.fill(-1.0);
        return s;
    }
    double pn = 0.0;
    for (double v : proto.v) pn += v * v;
    pn = std::sqrt(pn);
    if (pn == 0.0) return s;  // zero prototype scores 0 everywhere
    for (int cy = 0; cy < h; ++cy) {
        for (int cx = 0; cx < w; ++cx) {
            const double* f = features.px(cy, cx);
            double dot = 0.0, fn = 0.0;
            for (int c = 0; c < C; ++c) {
                dot += f[c] * proto.v[c];
                fn += f[c] * f[c];
            }
            s.at(cy, cx) = fn == 0.0 ? 0.0 : dot / (std::sqrt(fn) * pn);
        }
    }
    return s;
}

Grid<double> merge_obstacle_similarity(const Grid<double>& s_static,
                                       const std::vector<Grid<double>>& s_boxes,
                                       const PrototypeSet& protos,
                                       const std::vector<ObstacleBox>& boxes, int stride) {
    if (s_boxes.size() != boxes.size() || protos.boxes.size() != boxes.size()) {
        throw ShapeError("merge_obstacle_similarity: box map count mismatch");
    }
    const int h = s_static.height, w = s_static.width;
    Grid<double> merged = s_static;
    std::vector<GridRect> rects;
    rects.reserve(boxes.size());
    for (const auto& b : boxes) rects.push_back(box_footprint(b, stride, h, w));

    for (int cy = 0; cy < h; ++cy) {
        for (int cx = 0; cx < w; ++cx) {
            bool covered = false;
            double best = 0.0;
            for (size_t k = 0; k < rects.size(); ++k) {
                if (!rects[k].contains(cy, cx)) continue;
                const double v =
                    protos.boxes[k].valid ? s_boxes[k].at(cy, cx) : s_static.at(cy, cx);
                best = covered ? std::max(best, v) : v;
                covered = true;
            }
            if (covered) merged.at(cy, cx) = best;
        }
    }
    return merged;
}

Field<double> softmax_probs(const Grid<double>& s_water, const Grid<double>& s_sky,
                            const Grid<double>& s_obstacle, double beta_s) {
    const int h = s_water.height, w = s_water.width;
    Field<double> p(h, w, kNumClasses);
    for (int cy = 0; cy < h; ++cy) {
        for (int cx = 0; cx < w; ++cx) {
            double s[kNumClasses] = {beta_s * s_water.at(cy, cx), beta_s * s_sky.at(cy, cx),
                                     beta_s * s_obstacle.at(cy, cx)};
            const double m = std::max(s[0], std::max(s[1], s[2]));
            double sum = 0.0;
            double* out = p.px(cy, cx);
            for (int c = 0; c < kNumClasses; ++c) {
                out[c] = std::exp(s[c] - m);
                sum += out[c];
            }
            for (int c = 0; c < kNumClasses; ++c) out[c] /= sum;
        }
    }
    return p;
}

double DensePseudoLabelMap::constrained_fraction() const {
    if (constrained.data.empty()) return 0.0;
    size_t n = 0;
    for (uint8_t v : constrained.data) n += v != 0;
    return static_cast<double>(n) / static_cast<double>(constrained.data.size());
}

DensePseudoLabelMap dense_pseudo_labels(const Field<double>& probs_up,
                                        const PartialLabelMap& partial,
                                        const PseudoLabelConfig& cfg) {
    validate_pseudo_config(cfg);
    if (!probs_up.same_shape(partial)) {
        throw ShapeError("dense_pseudo_labels: probability/partial shape mismatch");
    }
    DensePseudoLabelMap out;
    out.labels = Field<double>(partial.height, partial.width, kNumClasses, 0.0);
    out.constrained = Mask(partial.height, partial.width, 0);
    for (int y = 0; y < partial.height; ++y) {
        for (int x = 0; x < partial.width; ++x) {
            const double* part = partial.px(y, x);
            double* dst = out.labels.px(y, x);
            if (part[0] != 0.0 || part[1] != 0.0 || part[2] != 0.0) {
                out.constrained.at(y, x) = 1;
                dst[0] = part[0];
                dst[1] = part[1];
                dst[2] = part[2];
            } else {
                const double* p = probs_up.px(y, x);
                for (int c = 0; c < kNumClasses; ++c) dst[c] = cfg.w * p[c];
            }
        }
    }
    return out;
}

DensePseudoLabelMap estimate_pseudo_labels(const ModelParams& params, const Field<double>& rgb,
                                           const WeakAnnotation& ann,
                                           const RestrictionMasks& restrictions,
                                           const PartialLabelMap& partial,
                                           const PseudoLabelConfig& cfg,
                                           const PseudoAblation& ablation) {
    validate_pseudo_config(cfg);
    ForwardPass fp = forward(params, make_net_input(rgb, params.cfg, ann.horizon));
    const Field<double>& features = fp.features();
    const int stride = rgb.height / features.height;

    Field<double> consolidated =
        ablation.no_consolidation ? fp.probs : consolidate(fp.probs, restrictions, true);

    Field<double> probs_up;
    if (ablation.no_features) {
        probs_up = consolidated;
    } else {
        Field<double> probs_ds = downsample_probs(consolidated, stride);
        PrototypeSet protos = class_prototypes(features, probs_ds, ann.boxes, stride);
        Grid<double> s_w = similarity_map(features, protos.water);
        Grid<double> s_s = similarity_map(features, protos.sky);
        Grid<double> s_st = similarity_map(features, protos.static_obstacle);
        std::vector<Grid<double>> s_boxes;
        s_boxes.reserve(protos.boxes.size());
        for (const auto& p : protos.boxes) s_boxes.push_back(similarity_map(features, p));
        Grid<double> s_o = merge_obstacle_similarity(s_st, s_boxes, protos, ann.boxes, stride);
        Field<double> p_feat = softmax_probs(s_w, s_s, s_o, cfg.beta_s);
        probs_up = bilinear_resize(p_feat, rgb.height, rgb.width);
    }

    if (!ablation.no_consolidation) probs_up = consolidate(probs_up, restrictions, true);
    return dense_pseudo_labels(probs_up, partial, cfg);
}

}  // namespace slr
