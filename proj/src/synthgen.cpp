#include "slr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "slr/errors.hpp"
#include "slr/image_io.hpp"
#include "slr/rng.hpp"
#include "slr/slrt.hpp"

namespace slr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Rgb {
    double r = 0, g = 0, b = 0;
};

Rgb hsv(double h, double s, double v) {
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp) % 6) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const double m = v - c;
    return {r + m, g + m, b + m};
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// Stateless per-pixel noise in [0,1); independent of the draw order.
double hash_noise(uint64_t salt, int x, int y) {
    uint64_t h = salt ^ (static_cast<uint64_t>(x) * 0x9e3779b97f4a7c15ull) ^
                 (static_cast<uint64_t>(y) * 0xc2b2ae3d27d4eb4full);
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    h ^= h >> 31;
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void put_px(Field<double>& img, int y, int x, const Rgb& c) {
    double* p = img.px(y, x);
    p[0] = std::clamp(c.r, 0.0, 1.0);
    p[1] = std::clamp(c.g, 0.0, 1.0);
    p[2] = std::clamp(c.b, 0.0, 1.0);
}

Rgb get_px(const Field<double>& img, int y, int x) {
    const double* p = img.px(y, x);
    return {p[0], p[1], p[2]};
}

struct ShapePixels {
    std::vector<std::pair<int, int>> pixels;  // (y, x)
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;

    void add(int y, int x) {
        pixels.emplace_back(y, x);
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1);
        y1 = std::max(y1, y + 1);
    }
    int area() const { return static_cast<int>(pixels.size()); }
    int box_area() const { return (x1 - x0) * (y1 - y0); }
};

}  // namespace

void validate_scene_params(const SceneParams& p) {
    if (p.height < 16 || p.width < 16) throw ConfigError("scene dims must be at least 16x16");
    if (p.height % p.feature_stride != 0 || p.width % p.feature_stride != 0) {
        throw ConfigError("scene dims " + std::to_string(p.height) + "x" + std::to_string(p.width) +
                          " not divisible by feature stride " + std::to_string(p.feature_stride));
    }
    if (p.min_obstacles < 0 || p.max_obstacles < p.min_obstacles) {
        throw ConfigError("bad obstacle count range");
    }
    if (p.reflection_prob < 0.0 || p.reflection_prob > 1.0) {
        throw ConfigError("reflection_prob must be in [0,1]");
    }
    if (!(p.camera_height > 0.0)) throw ConfigError("camera_height must be > 0");
    if (!(p.danger_radius > 0.0)) throw ConfigError("danger_radius must be > 0");
}

SceneRecord generate_scene(uint64_t seed, const SceneParams& params) {
    validate_scene_params(params);
    const int H = params.height, W = params.width;
    Rng rng(seed);

    SceneRecord rec;
    rec.image = Field<double>(H, W, 3);
    rec.dense_gt = Grid<uint8_t>(H, W, kWater);
    rec.distance = Grid<double>(H, W, kInfDistance);

    // Horizon.
    const double h_base = H * rng.uniform(0.30, 0.42);
    const double tilt = rng.uniform(-2.5, 2.5);
    rec.weak.horizon.left_row = h_base - tilt * 0.5;
    rec.weak.horizon.right_row = h_base + tilt * 0.5;
    const ImageDims dims{W, H};

    // Water edge: smooth rough profile strictly below the horizon, sampled
    // as a polyline control point every 8 columns.
    const double base_depth = H * rng.uniform(0.05, 0.16);
    double amp[3] = {H * 0.030 * params.shore_roughness, H * 0.018 * params.shore_roughness,
                     H * 0.008 * params.shore_roughness};
    double freq[3] = {rng.uniform(1.0, 2.5), rng.uniform(3.0, 6.0), rng.uniform(7.0, 14.0)};
    double phase[3] = {rng.uniform(0.0, 6.2831853), rng.uniform(0.0, 6.2831853),
                       rng.uniform(0.0, 6.2831853)};
    std::vector<EdgePoint> chain;
    for (int x = 0; x < W; x += 8) chain.push_back({static_cast<double>(x), 0.0});
    if (chain.back().x != W - 1) chain.push_back({static_cast<double>(W - 1), 0.0});
    for (auto& p : chain) {
        double depth = base_depth;
        for (int k = 0; k < 3; ++k) {
            depth += amp[k] * std::sin(2.0 * 3.14159265358979 * freq[k] * p.x / W + phase[k]);
        }
        depth = std::max(depth, 0.6);
        double row = rec.weak.horizon.row_at(p.x, dims) + depth;
        p.y = std::min(row, H * 0.68);
    }
    rec.weak.edge.polylines.push_back(chain);
    EdgeRowMap edge = rasterize_water_edge(rec.weak.edge, dims);

    // Base classes.
    for (int x = 0; x < W; ++x) {
        const double h_row = rec.weak.horizon.row_at(x, dims);
        for (int y = 0; y < H; ++y) {
            if (y + 0.5 < h_row) {
                rec.dense_gt.at(y, x) = kSky;
            } else if (y + 0.5 < edge.row[x]) {
                rec.dense_gt.at(y, x) = kObstacle;  // static shore band
            } else {
                rec.dense_gt.at(y, x) = kWater;
            }
        }
    }

    // Palette.
    const Rgb sky_top = hsv(rng.uniform(0.55, 0.62), rng.uniform(0.25, 0.45), rng.uniform(0.75, 0.95));
    const Rgb sky_low = hsv(rng.uniform(0.53, 0.60), rng.uniform(0.05, 0.18), rng.uniform(0.90, 1.0));
    const bool green_shore = rng.bernoulli(0.5);
    const Rgb shore_base = green_shore
                               ? hsv(rng.uniform(0.20, 0.33), rng.uniform(0.35, 0.65), rng.uniform(0.25, 0.45))
                               : hsv(rng.uniform(0.05, 0.12), rng.uniform(0.35, 0.65), rng.uniform(0.30, 0.55));
    const double water_hue = rng.uniform(0.54, 0.62);
    const double water_sat = rng.uniform(0.45, 0.75);
    const double water_val = rng.uniform(0.30, 0.50);
    const double wave_amp = rng.uniform(0.015, 0.04);
    const double wave_fy = rng.uniform(6.0, 14.0);
    const double wave_fx = rng.uniform(1.0, 5.0);
    const double wave_phase = rng.uniform(0.0, 6.2831853);
    const uint64_t noise_salt = rng.next_u64();

    auto water_color = [&](int y, int x) {
        const double h_row = rec.weak.horizon.row_at(x, dims);
        const double depth_frac = std::clamp((y - h_row) / std::max(1.0, H - h_row), 0.0, 1.0);
        double v = water_val + 0.12 * (1.0 - depth_frac);
        v += wave_amp * std::sin(2.0 * 3.14159265358979 * (wave_fy * y + wave_fx * x) / H + wave_phase);
        v += 0.02 * (hash_noise(noise_salt, x, y) - 0.5);
        return hsv(water_hue, water_sat, std::clamp(v, 0.0, 1.0));
    };

    for (int x = 0; x < W; ++x) {
        const double h_row = rec.weak.horizon.row_at(x, dims);
        for (int y = 0; y < H; ++y) {
            switch (rec.dense_gt.at(y, x)) {
                case kSky: {
                    const double t = std::clamp(y / std::max(1.0, h_row), 0.0, 1.0);
                    put_px(rec.image, y, x, mix(sky_top, sky_low, t));
                    break;
                }
                case kObstacle: {  // shore
                    Rgb c = shore_base;
                    const double n = hash_noise(noise_salt ^ 0x5b5b, x, y) - 0.5;
                    c.r = std::clamp(c.r + 0.12 * n, 0.0, 1.0);
                    c.g = std::clamp(c.g + 0.12 * n, 0.0, 1.0);
                    c.b = std::clamp(c.b + 0.10 * n, 0.0, 1.0);
                    put_px(rec.image, y, x, c);
                    break;
                }
                default:
                    put_px(rec.image, y, x, water_color(y, x));
            }
        }
    }

    // Clouds.
    const int n_clouds = rng.uniform_int(0, 3);
    for (int k = 0; k < n_clouds; ++k) {
        const double cx = rng.uniform(0.0, W);
        const double cy = rng.uniform(0.0, 0.6 * h_base);
        const double rx = rng.uniform(6.0, 18.0);
        const double ry = rng.uniform(2.0, 5.0);
        const double alpha = rng.uniform(0.25, 0.55);
        for (int y = std::max(0, static_cast<int>(cy - 2 * ry)); y < std::min(H, static_cast<int>(cy + 2 * ry) + 1); ++y) {
            for (int x = std::max(0, static_cast<int>(cx - 2 * rx)); x < std::min(W, static_cast<int>(cx + 2 * rx) + 1); ++x) {
                if (rec.dense_gt.at(y, x) != kSky) continue;
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                const double g = std::exp(-(dx * dx + dy * dy));
                if (g < 0.05) continue;
                put_px(rec.image, y, x, mix(get_px(rec.image, y, x), {1.0, 1.0, 1.0}, alpha * g));
            }
        }
    }

    // Dynamic obstacles.
    const int want = rng.uniform_int(params.min_obstacles, params.max_obstacles);
    const double base_hue = rng.next_unit();
    struct Placed {
        ShapePixels shape;
        Rgb color;
        int id;
    };
    std::vector<Placed> placed;
    for (int k = 0; k < want; ++k) {
        bool ok = false;
        for (int attempt = 0; attempt < 30 && !ok; ++attempt) {
            const int bw = rng.uniform_int(8, 22);
            const int bh = rng.uniform_int(6, 14);
            if (bw + 4 >= W) continue;
            const int x0 = rng.uniform_int(1, W - bw - 2);
            double e_max = 0.0;
            for (int x = x0; x < x0 + bw; ++x) e_max = std::max(e_max, edge.row[x]);
            // Keep a margin below the edge so the first water rows of every
            // column stay obstacle-free (the A_W boundary scan relies on it).
            const int y_min = static_cast<int>(std::ceil(e_max + 0.7)) + 3;
            const int y_max = H - bh - 8;
            if (y_min > y_max) continue;
            const int y0 = rng.uniform_int(y_min, y_max);
            bool overlap = false;
            for (const auto& p : placed) {
                if (x0 < p.shape.x1 + 2 && x0 + bw > p.shape.x0 - 2 && y0 < p.shape.y1 + 2 &&
                    y0 + bh > p.shape.y0 - 2) {
                    overlap = true;
                    break;
                }
            }
            if (overlap) continue;

            const bool boat = rng.bernoulli(0.5);
            ShapePixels shape;
            if (boat) {
                const int hull_top = y0 + static_cast<int>(0.45 * bh);
                const int cab_w = std::max(2, bw / 2);
                const int cab_x0 = x0 + (bw - cab_w) / 2;
                for (int y = y0; y < y0 + bh; ++y) {
                    for (int x = x0; x < x0 + bw; ++x) {
                        const bool hull = y >= hull_top;
                        const bool cabin = !hull && x >= cab_x0 && x < cab_x0 + cab_w;
                        if (hull || cabin) shape.add(y, x);
                    }
                }
            } else {
                const double rx = (bw - 1) / 2.0, ry = (bh - 1) / 2.0;
                const double cx = x0 + rx, cy = y0 + ry;
                for (int y = y0; y < y0 + bh; ++y) {
                    for (int x = x0; x < x0 + bw; ++x) {
                        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                        if (dx * dx + dy * dy <= 1.0 + 1e-9) shape.add(y, x);
                    }
                }
            }
            if (shape.area() == 0 || shape.area() < static_cast<int>(0.6 * shape.box_area())) continue;

            const double hue = base_hue + 0.381966 * static_cast<double>(placed.size());
            const Rgb color = hsv(hue, rng.uniform(0.55, 0.9), rng.uniform(0.35, 0.8));
            Placed p;
            p.shape = shape;
            p.color = color;
            p.id = static_cast<int>(placed.size()) + 1;
            placed.push_back(std::move(p));
            ok = true;
        }
    }

    for (const auto& p : placed) {
        for (const auto& [y, x] : p.shape.pixels) {
            rec.dense_gt.at(y, x) = kObstacle;
            Rgb c = p.color;
            const double shade = 0.18 * (1.0 - static_cast<double>(y - p.shape.y0) /
                                                   std::max(1, p.shape.y1 - 1 - p.shape.y0));
            const double n = 0.06 * (hash_noise(noise_salt ^ 0xa7a7, x, y) - 0.5);
            c.r = std::clamp(c.r + shade + n, 0.0, 1.0);
            c.g = std::clamp(c.g + shade + n, 0.0, 1.0);
            c.b = std::clamp(c.b + shade + n, 0.0, 1.0);
            put_px(rec.image, y, x, c);
        }
        rec.weak.boxes.push_back(
            {p.id, p.shape.x0, p.shape.y0, p.shape.x1, p.shape.y1});
    }

    // Reflections: vertically mirrored, attenuated, rippled copies below
    // each obstacle, labeled water in the ground truth.
    for (const auto& p : placed) {
        if (!rng.bernoulli(params.reflection_prob)) continue;
        const double ripple_amp = rng.uniform(0.6, 1.8);
        const double ripple_len = rng.uniform(5.0, 12.0);
        const double ripple_phase = rng.uniform(0.0, 6.2831853);
        const int obst_h = p.shape.y1 - p.shape.y0;
        for (const auto& [y, x] : p.shape.pixels) {
            const int ry = 2 * p.shape.y1 - 1 - y;
            if (ry >= H) continue;
            const int rx =
                x + static_cast<int>(std::lround(ripple_amp * std::sin(2.0 * 3.14159265358979 * ry / ripple_len + ripple_phase)));
            if (rx < 0 || rx >= W) continue;
            if (rec.dense_gt.at(ry, rx) != kWater) continue;
            const double fade = std::exp(-static_cast<double>(ry - p.shape.y1) / (1.5 * obst_h));
            const double a = params.reflection_strength * fade;
            Rgb src = get_px(rec.image, y, x);
            src.r *= 0.92;
            src.g *= 0.92;
            src.b *= 0.95;
            put_px(rec.image, ry, rx, mix(get_px(rec.image, ry, rx), src, a));
        }
    }

    // Sun glitter on water.
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (rec.dense_gt.at(y, x) != kWater) continue;
            if (!rng.bernoulli(params.glitter_density)) continue;
            put_px(rec.image, y, x, mix(get_px(rec.image, y, x), {1.0, 1.0, 0.92}, 0.8));
            if (x + 1 < W && rec.dense_gt.at(y, x + 1) == kWater) {
                put_px(rec.image, y, x + 1, mix(get_px(rec.image, y, x + 1), {1.0, 1.0, 0.92}, 0.5));
            }
        }
    }

    // Flat-ground pinhole range. Finite on the water plane: water pixels and
    // dynamic obstacles sitting on it; +inf on sky and the shore band.
    Mask dynamic(H, W, 0);
    for (const auto& p : placed)
        for (const auto& [y, x] : p.shape.pixels) dynamic.at(y, x) = 1;
    const double h_mean = 0.5 * (rec.weak.horizon.left_row + rec.weak.horizon.right_row);
    const double focal = 3.0 * (H - 0.5 - h_mean) / params.camera_height;
    for (int x = 0; x < W; ++x) {
        const double h_row = rec.weak.horizon.row_at(x, dims);
        for (int y = 0; y < H; ++y) {
            const bool on_plane = rec.dense_gt.at(y, x) == kWater || dynamic.at(y, x);
            if (!on_plane) continue;
            const double dy = (y + 0.5) - h_row;
            if (dy <= 0.0) continue;
            rec.distance.at(y, x) = params.camera_height * focal / dy;
        }
    }

    return rec;
}

std::string scene_params_to_json(const SceneParams& p) {
    json j;
    j["dims"] = {p.height, p.width};
    j["shore_roughness"] = p.shore_roughness;
    j["n_obstacles"] = {p.min_obstacles, p.max_obstacles};
    j["reflection_prob"] = p.reflection_prob;
    j["reflection_strength"] = p.reflection_strength;
    j["glitter_density"] = p.glitter_density;
    j["camera_height"] = p.camera_height;
    j["danger_radius"] = p.danger_radius;
    j["feature_stride"] = p.feature_stride;
    return j.dump();
}

SceneParams scene_params_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad scene params JSON: ") + e.what());
    }
    SceneParams p;
    if (j.contains("dims")) {
        p.height = j["dims"].at(0).get<int>();
        p.width = j["dims"].at(1).get<int>();
    }
    p.shore_roughness = j.value("shore_roughness", p.shore_roughness);
    if (j.contains("n_obstacles")) {
        p.min_obstacles = j["n_obstacles"].at(0).get<int>();
        p.max_obstacles = j["n_obstacles"].at(1).get<int>();
    }
    p.reflection_prob = j.value("reflection_prob", p.reflection_prob);
    p.reflection_strength = j.value("reflection_strength", p.reflection_strength);
    p.glitter_density = j.value("glitter_density", p.glitter_density);
    p.camera_height = j.value("camera_height", p.camera_height);
    p.danger_radius = j.value("danger_radius", p.danger_radius);
    p.feature_stride = j.value("feature_stride", p.feature_stride);
    validate_scene_params(p);
    return p;
}

std::string generate_dataset(uint64_t root_seed, int n_train, int n_test,
                             const SceneParams& params, const std::string& out_dir, bool force) {
    validate_scene_params(params);
    if (n_train <= 0 || n_test <= 0) throw ConfigError("n_train and n_test must be positive");

    const fs::path base(out_dir);
    const fs::path manifest_path = base / "manifest.json";
    if (fs::exists(manifest_path) && !force) {
        throw IoError(out_dir + " already contains a dataset (use force to overwrite)");
    }
    fs::create_directories(base / "train");
    fs::create_directories(base / "test");

    json manifest;
    manifest["dims"] = {params.height, params.width};
    manifest["root_seed"] = root_seed;
    manifest["params"] = json::parse(scene_params_to_json(params));

    auto emit_split = [&](const std::string& split, int count) {
        json entries = json::array();
        for (int i = 0; i < count; ++i) {
            const uint64_t seed = Rng::stream_seed(root_seed, split + "-scene", static_cast<uint64_t>(i));
            SceneRecord rec = generate_scene(seed, params);
            char id[16];
            std::snprintf(id, sizeof id, "img-%03d", i);
            const std::string rel_img = split + "/" + id + ".ppm";
            const std::string rel_gt = split + "/" + id + "-gt.pgm";
            const std::string rel_ann = split + "/" + id + "-ann.json";
            const std::string rel_dist = split + "/" + id + "-dist.slrt";
            write_ppm((base / rel_img).string(), rec.image);
            write_pgm((base / rel_gt).string(), rec.dense_gt);
            save_annotation((base / rel_ann).string(), rec.weak);
            write_slrt((base / rel_dist).string(), to_f32_tensor(rec.distance));
            entries.push_back({{"id", id},
                               {"seed", seed},
                               {"image", rel_img},
                               {"gt", rel_gt},
                               {"annotation", rel_ann},
                               {"distance", rel_dist}});
        }
        manifest[split] = entries;
    };
    emit_split("train", n_train);
    emit_split("test", n_test);

    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + manifest_path.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("write failed on " + manifest_path.string());
    return manifest_path.string();
}

}  // namespace slr
