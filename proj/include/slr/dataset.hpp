#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/partial_labels.hpp"
#include "slr/synthgen.hpp"
#include "slr/tensor.hpp"

namespace slr {

struct DatasetEntry {
    std::string id;
    uint64_t seed = 0;
    std::string image, gt, annotation, distance;  // paths relative to base_dir
};

struct DatasetManifest {
    int height = 0;
    int width = 0;
    uint64_t root_seed = 0;
    SceneParams params;
    std::vector<DatasetEntry> train;
    std::vector<DatasetEntry> test;
    std::string base_dir;
};

DatasetManifest load_manifest(const std::string& manifest_path);

// One image with everything both training stages and evaluation need.
// Constraint products (region masks, restrictions, partial labels) are
// computed once at load time.
struct Scene {
    std::string id;
    Field<double> image;
    Grid<uint8_t> dense_gt;
    WeakAnnotation ann;
    Grid<double> distance;
    EdgeRowMap edge_rows;
    RestrictionMasks restrictions;
    PartialLabelMap partial;
    Mask above_edge;
};

Scene load_scene(const DatasetManifest& manifest, const DatasetEntry& entry,
                 const LabelGenConfig& label_cfg);
std::vector<Scene> load_split(const DatasetManifest& manifest,
                              const std::vector<DatasetEntry>& entries,
                              const LabelGenConfig& label_cfg, int threads);

// One-hot encoding of the dense ground truth (dense-warm-up ablation).
Field<double> one_hot_labels(const Grid<uint8_t>& gt);

// Horizontal mirroring helpers used by training augmentation. Annotation
// flips mirror boxes and swap the horizon endpoints.
Field<double> flip_horizontal(const Field<double>& f);
Grid<uint8_t> flip_horizontal(const Grid<uint8_t>& g);
WeakAnnotation flip_annotation(const WeakAnnotation& ann, int width);

}  // namespace slr
