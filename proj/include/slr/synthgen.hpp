#pragma once

#include <cstdint>
#include <string>

#include "slr/annotations.hpp"
#include "slr/tensor.hpp"

namespace slr {

// Procedural marine scene: sky gradient above the horizon, a textured shore
// band down to a rough water edge, wavy water with sun glitter below, and
// dynamic obstacles with optional mirrored reflections (rendered as water in
// the ground truth, the classic false-positive trap).
struct SceneParams {
    int height = 96;
    int width = 128;
    double shore_roughness = 1.0;
    int min_obstacles = 1;
    int max_obstacles = 4;
    double reflection_prob = 0.8;
    double reflection_strength = 0.6;
    double glitter_density = 0.002;
    double camera_height = 1.0;   // meters
    double danger_radius = 15.0;  // meters
    int feature_stride = 4;       // dims must be divisible by this
};

void validate_scene_params(const SceneParams& params);

struct SceneRecord {
    Field<double> image;     // H x W x 3, values in [0,1]
    Grid<uint8_t> dense_gt;  // 0=water, 1=sky, 2=obstacle
    WeakAnnotation weak;
    // Flat-ground pinhole range in meters, finite on the water plane (water
    // and dynamic obstacles), +inf on sky and static shore. Calibrated so
    // the bottom image row maps to 3 m.
    Grid<double> distance;
};

SceneRecord generate_scene(uint64_t seed, const SceneParams& params);

// Writes images (PPM), dense ground truth (PGM), weak annotations (JSON) and
// distance maps (SLRT f32) for both splits plus a manifest.json. Train and
// test scene seeds come from disjoint sub-streams of the root seed.
// Refuses to overwrite an existing dataset unless force is set.
std::string generate_dataset(uint64_t root_seed, int n_train, int n_test,
                             const SceneParams& params, const std::string& out_dir,
                             bool force = false);

std::string scene_params_to_json(const SceneParams& params);
SceneParams scene_params_from_json(const std::string& text);

}  // namespace slr
