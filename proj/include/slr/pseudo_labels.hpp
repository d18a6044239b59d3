#pragma once

#include <vector>

#include "slr/annotations.hpp"
#include "slr/net.hpp"
#include "slr/partial_labels.hpp"
#include "slr/tensor.hpp"

namespace slr {

struct PseudoLabelConfig {
    double beta_s = 20.0;  // similarity softmax scale
    double w = 0.5;        // down-weight for estimated labels
};

void validate_pseudo_config(const PseudoLabelConfig& cfg);

struct Prototype {
    std::vector<double> v;
    bool valid = false;
};

struct PrototypeSet {
    Prototype water;
    Prototype sky;
    Prototype static_obstacle;
    std::vector<Prototype> boxes;  // aligned with the annotation box list
};

// Cell-space rectangle covered by an image-space box at a given stride
// (cells whose pixel block intersects the box).
struct GridRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool contains(int cy, int cx) const { return cx >= x0 && cx < x1 && cy >= y0 && cy < y1; }
};

GridRect box_footprint(const ObstacleBox& box, int stride, int grid_h, int grid_w);

// Block-average pooling of each channel over stride x stride cells; edge
// cells average over their actual pixel count.
Field<double> downsample_probs(const Field<double>& probs, int stride);

// Masked average pooling (prototype = probability-weighted feature mean).
// Water and sky pool over the whole grid; each box pools the obstacle
// probability over its footprint; the static prototype pools obstacle
// probability outside every footprint. Prototypes with supporting mass
// below 1e-6 are flagged invalid. Throws PrototypeFailure when no
// prototype is valid.
PrototypeSet class_prototypes(const Field<double>& features, const Field<double>& probs_ds,
                              const std::vector<ObstacleBox>& boxes, int stride);

// Cosine similarity of every feature vector with one prototype; zero
// feature vectors score 0.
Grid<double> similarity_map(const Field<double>& features, const Prototype& proto);

// Per-cell obstacle similarity: a box contributes its own similarity map
// inside its footprint (falling back to the static map when its prototype
// is invalid); overlaps take the maximum contribution; cells outside all
// footprints take the static map. Invalid static prototype scores -1.
Grid<double> merge_obstacle_similarity(const Grid<double>& s_static,
                                       const std::vector<Grid<double>>& s_boxes,
                                       const PrototypeSet& protos,
                                       const std::vector<ObstacleBox>& boxes, int stride);

// Temperature softmax over the three class similarity maps.
Field<double> softmax_probs(const Grid<double>& s_water, const Grid<double>& s_sky,
                            const Grid<double>& s_obstacle, double beta_s);

struct DensePseudoLabelMap {
    Field<double> labels;  // H x W x 3
    Mask constrained;      // pixels copied from the partial labels

    double constrained_fraction() const;
};

// Constrained pixels (any nonzero partial channel) copy the partial labels
// exactly; unconstrained pixels take w * P. P must already be consolidated
// with renormalization on.
DensePseudoLabelMap dense_pseudo_labels(const Field<double>& probs_up,
                                        const PartialLabelMap& partial,
                                        const PseudoLabelConfig& cfg);

struct PseudoAblation {
    bool no_consolidation = false;  // skip both consolidation passes
    bool no_features = false;       // use consolidated predictions directly
};

// Full per-image pipeline: forward pass, consolidation, prototype and
// similarity computation at the feature grid, softmax, bilinear upsampling
// to image resolution, consolidation, label completion.
DensePseudoLabelMap estimate_pseudo_labels(const ModelParams& params, const Field<double>& rgb,
                                           const WeakAnnotation& ann,
                                           const RestrictionMasks& restrictions,
                                           const PartialLabelMap& partial,
                                           const PseudoLabelConfig& cfg,
                                           const PseudoAblation& ablation);

}  // namespace slr
