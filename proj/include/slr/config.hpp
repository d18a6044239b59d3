#pragma once

#include <cstdint>
#include <string>

#include "slr/eval.hpp"
#include "slr/losses.hpp"
#include "slr/net.hpp"
#include "slr/partial_labels.hpp"
#include "slr/pseudo_labels.hpp"

namespace slr {

struct AblationFlags {
    bool no_consolidation = false;  // skip constraint consolidation in step 2
    bool no_features = false;       // step 2 uses predictions directly
    bool no_retrain = false;        // warm-up only, for the combined epoch count
    bool no_pairwise = false;       // lambda1 = 0
    bool dense_warmup = false;      // warm-up on dense ground truth
};

// Ablation variants addressable by name: none, C, F, RT, PL, DW.
AblationFlags ablation_by_name(const std::string& name);
std::string ablation_name(const AblationFlags& flags);

struct SLRConfig {
    uint64_t seed = 1;
    int warmup_epochs = 25;
    int retrain_epochs = 50;
    int iterations = 1;
    int batch_size = 12;
    bool augmentation = true;
    int threads = 1;  // 0 = hardware concurrency
    double lr = 1e-3;
    double poly_power = 0.9;
    AblationFlags ablation;
    LabelGenConfig labels;
    PseudoLabelConfig pseudo;
    LossWeights loss;
    PairwiseConfig pairwise;
    NetConfig net;
    OptimizerConfig optim;
    EvalConfig eval;
};

void validate_slr_config(const SLRConfig& cfg);

// Round-trips the full configuration; parsing fills unspecified fields with
// defaults so a partial document is a valid override set.
std::string slr_config_to_json(const SLRConfig& cfg);
SLRConfig slr_config_from_json(const std::string& text);

}  // namespace slr
