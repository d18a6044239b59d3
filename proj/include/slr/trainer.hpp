#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slr/config.hpp"
#include "slr/dataset.hpp"
#include "slr/eval.hpp"
#include "slr/losses.hpp"
#include "slr/net.hpp"

namespace slr {

struct EpochLoss {
    std::string stage;
    int epoch = 0;
    double lr = 0.0;
    LossTerms terms;
};

struct StageResult {
    std::string name;
    int epochs = 0;
    uint64_t init_hash = 0;
    std::string checkpoint;  // path relative to the run directory
    MetricsReport metrics;
    double wall_seconds = 0.0;
};

struct TrainRun {
    ModelParams model;
    std::vector<EpochLoss> loss_log;
    std::vector<StageResult> stages;
    std::vector<std::string> skipped;  // ids skipped by the last pseudo-label pass
};

// Warm-up training on constraint-generated partial labels (or dense ground
// truth under the dense-warm-up ablation). total_epochs overrides
// cfg.warmup_epochs so the no-retrain variant can train for the combined
// epoch count.
ModelParams train_warmup(const std::vector<Scene>& scenes, const SLRConfig& cfg, int total_epochs,
                         std::vector<EpochLoss>* loss_log);

struct PseudoGenResult {
    std::vector<std::string> skipped;             // scene ids
    std::vector<std::optional<Field<double>>> labels;  // aligned with scenes
};

// Step 2 over the whole training split; writes one SLRT tensor plus a JSON
// sidecar per image into out_dir and aborts when more than half the images
// fail prototype extraction.
PseudoGenResult generate_pseudo_dataset(const ModelParams& model, const std::vector<Scene>& scenes,
                                        const SLRConfig& cfg, const std::string& out_dir);

// Loads a pseudo-label cache written by generate_pseudo_dataset. Throws on
// missing entries (unless marked skipped in the sidecar).
PseudoGenResult load_pseudo_cache(const std::string& dir, const std::vector<Scene>& scenes);

// Re-training from a fresh initialization on dense pseudo labels.
// iteration numbers the re-training round (1-based) and selects the seed
// sub-streams, so round k is reproducible in isolation.
ModelParams train_retrain(const std::vector<Scene>& scenes, const PseudoGenResult& cache,
                          const SLRConfig& cfg, int iteration, std::vector<EpochLoss>* loss_log);

// Full pipeline: warm-up, then `iterations` rounds of pseudo-label
// estimation + re-training from scratch, evaluating after every stage.
// Writes config.json, stages.log, losses.csv, checkpoints/, pseudo label
// caches, report.json and report.csv into run_dir.
TrainRun run_slr(const DatasetManifest& manifest, const SLRConfig& cfg,
                 const std::string& run_dir);

std::string train_run_report_json(const SLRConfig& cfg, const TrainRun& run);

}  // namespace slr
