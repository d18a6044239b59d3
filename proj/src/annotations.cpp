#include "slr/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slr/errors.hpp"

namespace slr {

using nlohmann::json;

void validate_dims(const ImageDims& dims) {
    if (dims.width < 8 || dims.height < 8) {
        throw ValidationError("image dims must be at least 8x8, got " + std::to_string(dims.width) +
                              "x" + std::to_string(dims.height));
    }
}

void validate_annotation(const WeakAnnotation& ann, const ImageDims& dims) {
    validate_dims(dims);
    for (size_t p = 0; p < ann.edge.polylines.size(); ++p) {
        const auto& pl = ann.edge.polylines[p];
        if (pl.empty()) throw ValidationError("water edge polyline " + std::to_string(p) + " is empty");
        for (size_t i = 1; i < pl.size(); ++i) {
            if (!(pl[i].x > pl[i - 1].x)) {
                throw ValidationError("water edge polyline " + std::to_string(p) +
                                      " is not column-monotone at point " + std::to_string(i));
            }
        }
    }
    std::set<int> ids;
    for (const auto& b : ann.boxes) {
        if (!(0 <= b.x0 && b.x0 < b.x1 && b.x1 <= dims.width && 0 <= b.y0 && b.y0 < b.y1 &&
              b.y1 <= dims.height)) {
            throw ValidationError("obstacle box " + std::to_string(b.id) + " out of range");
        }
        if (!ids.insert(b.id).second) {
            throw ValidationError("duplicate obstacle box id " + std::to_string(b.id));
        }
    }
}

bool EdgeRowMap::any_covered() const {
    return std::find(covered.begin(), covered.end(), uint8_t{1}) != covered.end();
}

EdgeRowMap rasterize_water_edge(const WaterEdge& edge, const ImageDims& dims) {
    validate_dims(dims);
    EdgeRowMap map;
    map.row.assign(dims.width, 0.0);
    map.covered.assign(dims.width, 0);
    for (size_t p = 0; p < edge.polylines.size(); ++p) {
        const auto& pl = edge.polylines[p];
        if (pl.empty()) throw ValidationError("water edge polyline " + std::to_string(p) + " is empty");
        for (size_t i = 1; i < pl.size(); ++i) {
            if (!(pl[i].x > pl[i - 1].x)) {
                throw ValidationError("water edge polyline " + std::to_string(p) +
                                      " is not column-monotone at point " + std::to_string(i));
            }
        }
        int x_min = static_cast<int>(std::ceil(pl.front().x));
        int x_max = static_cast<int>(std::floor(pl.back().x));
        x_min = std::max(x_min, 0);
        x_max = std::min(x_max, dims.width - 1);
        size_t seg = 0;
        for (int x = x_min; x <= x_max; ++x) {
            while (seg + 2 < pl.size() && pl[seg + 1].x < x) ++seg;
            const EdgePoint& a = pl[seg];
            const EdgePoint& b = pl[std::min(seg + 1, pl.size() - 1)];
            double y;
            if (pl.size() == 1 || b.x == a.x) {
                y = a.y;
            } else {
                double t = (x - a.x) / (b.x - a.x);
                t = std::clamp(t, 0.0, 1.0);
                y = a.y + (b.y - a.y) * t;
            }
            map.row[x] = std::clamp(y, 0.0, static_cast<double>(dims.height));
            map.covered[x] = 1;
        }
    }
    return map;
}

RegionSets region_masks(const WeakAnnotation& ann, const ImageDims& dims) {
    validate_annotation(ann, dims);
    const int W = dims.width, H = dims.height;
    RegionSets r;
    r.above_horizon = Mask(H, W, 0);
    r.below_horizon = Mask(H, W, 0);
    r.above_edge = Mask(H, W, 0);
    r.below_edge = Mask(H, W, 0);
    r.box_mask = Grid<int>(H, W, 0);

    EdgeRowMap edge = rasterize_water_edge(ann.edge, dims);
    for (int x = 0; x < W; ++x) {
        double h_row = ann.horizon.row_at(x, dims);
        for (int y = 0; y < H; ++y) {
            bool above_h = (y + 0.5) < h_row;
            r.above_horizon.at(y, x) = above_h ? 1 : 0;
            r.below_horizon.at(y, x) = above_h ? 0 : 1;
            if (edge.covered[x]) {
                bool above_e = (y + 0.5) < edge.row[x];
                r.above_edge.at(y, x) = above_e ? 1 : 0;
                r.below_edge.at(y, x) = above_e ? 0 : 1;
            }
        }
    }
    for (const auto& b : ann.boxes) {
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) r.box_mask.at(y, x) = b.id;
    }
    return r;
}

Grid<double> edge_distance_map(const RegionSets& regions, const EdgeRowMap& edge_rows) {
    const int H = regions.above_edge.height;
    const int W = regions.above_edge.width;
    Grid<double> d(H, W, kInfDistance);

    std::vector<int> cols;
    for (int x = 0; x < edge_rows.width(); ++x)
        if (edge_rows.covered[x]) cols.push_back(x);
    if (cols.empty()) return d;

    // Exact nearest edge point. For one query row, the squared distance to
    // column xe is (x-xe)^2 + (y-ye)^2; scanning all covered columns per
    // pixel is fine at desk scale (W <= a few hundred).
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!regions.above_edge.at(y, x)) continue;
            double best = kInfDistance;
            for (int xe : cols) {
                double dx = x - xe;
                double dy = y - edge_rows.row[xe];
                double dist2 = dx * dx + dy * dy;
                if (dist2 < best) best = dist2;
            }
            d.at(y, x) = std::sqrt(best);
        }
    }
    return d;
}

std::string annotation_to_json(const WeakAnnotation& ann) {
    json j;
    j["horizon"] = {ann.horizon.left_row, ann.horizon.right_row};
    json edges = json::array();
    for (const auto& pl : ann.edge.polylines) {
        json chain = json::array();
        for (const auto& p : pl) chain.push_back({p.x, p.y});
        edges.push_back(chain);
    }
    j["water_edges"] = edges;
    json obstacles = json::array();
    for (const auto& b : ann.boxes) {
        obstacles.push_back({{"id", b.id}, {"bbox", {b.x0, b.y0, b.x1, b.y1}}});
    }
    j["obstacles"] = obstacles;
    return j.dump(2);
}

WeakAnnotation annotation_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("bad annotation JSON: ") + e.what());
    }
    WeakAnnotation ann;
    try {
        ann.horizon.left_row = j.at("horizon").at(0).get<double>();
        ann.horizon.right_row = j.at("horizon").at(1).get<double>();
        for (const auto& chain : j.at("water_edges")) {
            std::vector<EdgePoint> pl;
            for (const auto& p : chain) pl.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            ann.edge.polylines.push_back(std::move(pl));
        }
        for (const auto& o : j.at("obstacles")) {
            ObstacleBox b;
            b.id = o.at("id").get<int>();
            b.x0 = o.at("bbox").at(0).get<int>();
            b.y0 = o.at("bbox").at(1).get<int>();
            b.x1 = o.at("bbox").at(2).get<int>();
            b.y1 = o.at("bbox").at(3).get<int>();
            ann.boxes.push_back(b);
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("bad annotation JSON: ") + e.what());
    }
    return ann;
}

void save_annotation(const std::string& path, const WeakAnnotation& ann) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << annotation_to_json(ann) << "\n";
    if (!out) throw IoError("write failed on " + path);
}

WeakAnnotation load_annotation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return annotation_from_json(ss.str());
}

}  // namespace slr
