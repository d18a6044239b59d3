#pragma once

#include <utility>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/tensor.hpp"

namespace slr {

// Loss value plus exact gradients. Gradients are taken with respect to the
// class logits (softmax fused) and, for the separation loss, the feature
// map. Empty fields mean "no gradient on this input".
struct LossValue {
    double value = 0.0;
    Field<double> grad_logits;
    Field<double> grad_features;
};

struct LossWeights {
    double lambda1 = 1.0;     // pairwise
    double lambda2 = 1.0;     // projection (warm-up only)
    double lambda3 = 1e-4;    // water separation (re-training only)
    double gamma = 2.0;       // focal focusing exponent
};

struct PairwiseConfig {
    double tau_sim = 0.3;     // affinity threshold for qualifying edges
    double theta_col = 0.15;  // color kernel bandwidth, normalized units
    // Forward half of the 8-neighborhood at dilation 2; each undirected
    // edge is visited once.
    std::vector<std::pair<int, int>> neighborhood = {{0, 2}, {2, 0}, {2, 2}, {2, -2}};
};

void validate_pairwise_config(const PairwiseConfig& cfg);

// Certainty-weighted focal loss, normalized by total label mass so sparse
// partial labels keep a stable gradient scale. All-zero label pixels are
// ignored.
LossValue focal_loss(const Field<double>& probs, const Field<double>& labels, double gamma);

// -log of the class-agreement probability sum(p_i * p_j) on visually
// similar neighbor pairs, averaged over qualifying edges.
LossValue pairwise_loss(const Field<double>& probs, const Field<double>& image,
                        const PairwiseConfig& cfg);

// Dice loss between the per-axis max projections of the obstacle
// probability inside each box and the all-ones vector; mean over boxes and
// axes. Max uses a subgradient with ties broken toward the lowest index.
LossValue projection_loss(const Field<double>& probs, const std::vector<ObstacleBox>& boxes);

// Bounded Fisher-ratio separation between label-weighted water and
// obstacle feature statistics; 1 means no separation, -> 0 fully separated.
// labels_ds is the label map downsampled to the feature grid.
LossValue water_separation_loss(const Field<double>& features, const Field<double>& labels_ds);

// Per-term values for the training log.
struct LossTerms {
    double focal = 0.0;
    double pairwise = 0.0;
    double projection = 0.0;
    double separation = 0.0;
    double total = 0.0;

    void add(const LossTerms& o) {
        focal += o.focal;
        pairwise += o.pairwise;
        projection += o.projection;
        separation += o.separation;
        total += o.total;
    }
    void scale(double s) {
        focal *= s;
        pairwise *= s;
        projection *= s;
        separation *= s;
        total *= s;
    }
};

// focal(partial) + lambda1 * pairwise + lambda2 * projection
LossValue warmup_loss(const Field<double>& probs, const Field<double>& image,
                      const Field<double>& partial_labels, const std::vector<ObstacleBox>& boxes,
                      const LossWeights& weights, const PairwiseConfig& pcfg,
                      LossTerms* terms = nullptr);

// focal(pseudo) + lambda1 * pairwise + lambda3 * water separation
LossValue retrain_loss(const Field<double>& probs, const Field<double>& features,
                       const Field<double>& image, const Field<double>& pseudo_labels,
                       const LossWeights& weights, const PairwiseConfig& pcfg,
                       LossTerms* terms = nullptr);

}  // namespace slr
