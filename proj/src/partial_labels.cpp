#include "slr/partial_labels.hpp"

#include <cmath>

#include "slr/errors.hpp"

namespace slr {

void validate_label_config(const LabelGenConfig& cfg) {
    if (!(cfg.beta_w > 0.0)) throw ConfigError("beta_w must be > 0");
    if (!(cfg.theta_w > 0.0)) throw ConfigError("theta_w must be > 0");
}

RestrictionMasks restricted_regions(const RegionSets& regions, const EdgeRowMap& edge_rows) {
    const int H = regions.above_horizon.height;
    const int W = regions.above_horizon.width;
    RestrictionMasks masks;
    masks.restricted = Field<uint8_t>(H, W, kNumClasses, 0);

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            bool c_w = regions.above_horizon.at(y, x) || regions.above_edge.at(y, x);
            bool c_s = regions.below_horizon.at(y, x) || regions.below_edge.at(y, x);
            bool c_o = edge_rows.covered[x] && regions.box_mask.at(y, x) == 0 &&
                       !regions.above_edge.at(y, x);
            masks.restricted.at(y, x, kWater) = c_w ? 1 : 0;
            masks.restricted.at(y, x, kSky) = c_s ? 1 : 0;
            masks.restricted.at(y, x, kObstacle) = c_o ? 1 : 0;
            if (c_w && c_s && c_o) {
                throw AnnotationContradiction("annotation forbids every class at pixel (" +
                                                  std::to_string(x) + ", " + std::to_string(y) + ")",
                                              x, y);
            }
        }
    }
    return masks;
}

double obstacle_certainty(double d, const LabelGenConfig& cfg) {
    if (d >= cfg.theta_w) return 0.0;
    if (d == 0.0) return 1.0;
    return std::exp(-cfg.beta_w * d);
}

PartialLabelMap generate_partial_labels(const RegionSets& regions,
                                        const RestrictionMasks& restrictions,
                                        const Grid<double>& edge_distance,
                                        const LabelGenConfig& cfg) {
    validate_label_config(cfg);
    const int H = regions.above_horizon.height;
    const int W = regions.above_horizon.width;
    PartialLabelMap labels(H, W, kNumClasses, 0.0);

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            int admissible = -1;
            int count = 0;
            for (int c = 0; c < kNumClasses; ++c) {
                if (!restrictions.is_restricted(y, x, c)) {
                    admissible = c;
                    ++count;
                }
            }
            if (count == 1) {
                labels.at(y, x, admissible) = 1.0;
                continue;
            }
            // Distance band above the water edge: obstacle certainty decays
            // with distance. Never overwrites one-hot pixels (handled above)
            // and only applies where the obstacle class is admissible.
            if (regions.above_edge.at(y, x) && !restrictions.is_restricted(y, x, kObstacle)) {
                double d = edge_distance.at(y, x);
                if (std::isfinite(d)) labels.at(y, x, kObstacle) = obstacle_certainty(d, cfg);
            }
        }
    }
    return labels;
}

Field<double> consolidate(const Field<double>& probs, const RestrictionMasks& restrictions,
                          bool renormalize) {
    if (!probs.same_shape(Field<double>(restrictions.restricted.height,
                                        restrictions.restricted.width, kNumClasses))) {
        throw ShapeError("consolidate: probability map does not match restriction masks");
    }
    Field<double> out = probs;
    const int H = out.height, W = out.width;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double* p = out.px(y, x);
            for (int c = 0; c < kNumClasses; ++c) {
                if (restrictions.is_restricted(y, x, c)) p[c] = 0.0;
            }
            if (renormalize) {
                double s = p[0] + p[1] + p[2];
                if (s > 0.0 && std::abs(s - 1.0) > 1e-12) {
                    p[0] /= s;
                    p[1] /= s;
                    p[2] /= s;
                }
            }
        }
    }
    return out;
}

}  // namespace slr
