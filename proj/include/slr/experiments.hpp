#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slr/config.hpp"
#include "slr/dataset.hpp"

namespace slr {

struct AblationOptions {
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::vector<std::string> variants = {"none", "C", "F", "RT", "PL", "DW"};
};

// Runs every variant/seed combination of the base configuration and writes
// ablation.csv (per-run rows, per-variant seed medians, and directional
// summary rows comparing re-training and feature usage). Returns the CSV
// path. Run directories land under out_dir/runs/.
std::string run_ablation_table(const DatasetManifest& manifest, const SLRConfig& base,
                               const AblationOptions& options, const std::string& out_dir);

double median(std::vector<double> values);

}  // namespace slr
