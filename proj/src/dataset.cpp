#include "slr/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slr/errors.hpp"
#include "slr/image_io.hpp"
#include "slr/parallel.hpp"
#include "slr/slrt.hpp"

namespace slr {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetManifest load_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(manifest_path + ": bad manifest: " + e.what());
    }
    DatasetManifest m;
    try {
        m.height = j.at("dims").at(0).get<int>();
        m.width = j.at("dims").at(1).get<int>();
        m.root_seed = j.at("root_seed").get<uint64_t>();
        m.params = scene_params_from_json(j.at("params").dump());
        auto parse_split = [&](const char* name, std::vector<DatasetEntry>& out) {
            for (const auto& e : j.at(name)) {
                DatasetEntry d;
                d.id = e.at("id").get<std::string>();
                d.seed = e.at("seed").get<uint64_t>();
                d.image = e.at("image").get<std::string>();
                d.gt = e.at("gt").get<std::string>();
                d.annotation = e.at("annotation").get<std::string>();
                d.distance = e.at("distance").get<std::string>();
                out.push_back(std::move(d));
            }
        };
        parse_split("train", m.train);
        parse_split("test", m.test);
    } catch (const json::exception& e) {
        throw IoError(manifest_path + ": bad manifest: " + e.what());
    }
    m.base_dir = fs::path(manifest_path).parent_path().string();
    return m;
}

Scene load_scene(const DatasetManifest& manifest, const DatasetEntry& entry,
                 const LabelGenConfig& label_cfg) {
    const fs::path base(manifest.base_dir);
    Scene s;
    s.id = entry.id;
    s.image = read_ppm((base / entry.image).string());
    s.dense_gt = read_pgm((base / entry.gt).string());
    s.ann = load_annotation((base / entry.annotation).string());
    s.distance = grid_from_tensor(read_slrt((base / entry.distance).string()));

    const ImageDims dims{s.image.width, s.image.height};
    RegionSets regions = region_masks(s.ann, dims);
    s.edge_rows = rasterize_water_edge(s.ann.edge, dims);
    s.restrictions = restricted_regions(regions, s.edge_rows);
    Grid<double> d = edge_distance_map(regions, s.edge_rows);
    s.partial = generate_partial_labels(regions, s.restrictions, d, label_cfg);
    s.above_edge = regions.above_edge;
    return s;
}

std::vector<Scene> load_split(const DatasetManifest& manifest,
                              const std::vector<DatasetEntry>& entries,
                              const LabelGenConfig& label_cfg, int threads) {
    std::vector<Scene> scenes(entries.size());
    parallel_for(static_cast<int>(entries.size()), threads, [&](int i) {
        scenes[i] = load_scene(manifest, entries[i], label_cfg);
    });
    return scenes;
}

Field<double> one_hot_labels(const Grid<uint8_t>& gt) {
    Field<double> labels(gt.height, gt.width, kNumClasses, 0.0);
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            const uint8_t c = gt.at(y, x);
            if (c >= kNumClasses) throw ValidationError("ground truth id out of range");
            labels.at(y, x, c) = 1.0;
        }
    }
    return labels;
}

Field<double> flip_horizontal(const Field<double>& f) {
    Field<double> out(f.height, f.width, f.channels);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const double* src = f.px(y, f.width - 1 - x);
            double* dst = out.px(y, x);
            for (int c = 0; c < f.channels; ++c) dst[c] = src[c];
        }
    }
    return out;
}

Grid<uint8_t> flip_horizontal(const Grid<uint8_t>& g) {
    Grid<uint8_t> out(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) out.at(y, x) = g.at(y, g.width - 1 - x);
    return out;
}

WeakAnnotation flip_annotation(const WeakAnnotation& ann, int width) {
    WeakAnnotation out;
    out.horizon.left_row = ann.horizon.right_row;
    out.horizon.right_row = ann.horizon.left_row;
    for (const auto& pl : ann.edge.polylines) {
        std::vector<EdgePoint> flipped;
        flipped.reserve(pl.size());
        for (auto it = pl.rbegin(); it != pl.rend(); ++it) {
            flipped.push_back({width - 1.0 - it->x, it->y});
        }
        out.edge.polylines.push_back(std::move(flipped));
    }
    for (const auto& b : ann.boxes) {
        out.boxes.push_back({b.id, width - b.x1, b.y0, width - b.x0, b.y1});
    }
    return out;
}

}  // namespace slr
