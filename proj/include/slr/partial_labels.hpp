#pragma once

#include "slr/annotations.hpp"
#include "slr/tensor.hpp"

namespace slr {

// Class-restricted regions: restricted.at(y,x,c) != 0 means class c cannot
// appear at that pixel.
struct RestrictionMasks {
    Field<uint8_t> restricted;  // H x W x 3

    bool is_restricted(int y, int x, int c) const { return restricted.at(y, x, c) != 0; }
};

struct LabelGenConfig {
    double beta_w = 0.5;    // obstacle certainty decay, 1/pixels
    double theta_w = 12.0;  // certainty cutoff distance, pixels
};

void validate_label_config(const LabelGenConfig& cfg);

// Per-pixel per-class certainties in [0,1]; all-zero marks "unknown".
using PartialLabelMap = Field<double>;

// Water is forbidden above the horizon or water edge; sky below either;
// obstacles outside boxes on edge-covered columns, except above the edge.
// Columns without edge coverage take constraints from the horizon only, so
// the obstacle class is never restricted there.
// Throws AnnotationContradiction if some pixel forbids every class.
RestrictionMasks restricted_regions(const RegionSets& regions, const EdgeRowMap& edge_rows);

// Obstacle certainty as a function of distance above the water edge:
// exp(-beta_w * d) below the cutoff, exactly 0 at and beyond it.
double obstacle_certainty(double d, const LabelGenConfig& cfg);

// Constraint-generated partial labels: one-hot where a single class
// survives, the distance band above the edge on the obstacle channel, zeros
// (unknown) elsewhere.
PartialLabelMap generate_partial_labels(const RegionSets& regions,
                                        const RestrictionMasks& restrictions,
                                        const Grid<double>& edge_distance,
                                        const LabelGenConfig& cfg);

// Zeroes restricted channels. With renormalize on, surviving channels are
// rescaled to sum to 1 when any mass survives; rescaling is skipped when the
// surviving mass is already 1 within 1e-12, which makes the operation
// idempotent. All-zero pixels stay all-zero.
Field<double> consolidate(const Field<double>& probs, const RestrictionMasks& restrictions,
                          bool renormalize);

}  // namespace slr
