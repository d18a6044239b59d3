#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slr/tensor.hpp"

namespace slr {

constexpr double kInfDistance = std::numeric_limits<double>::infinity();

// Class channel order used everywhere in the pipeline.
enum ClassId : int { kWater = 0, kSky = 1, kObstacle = 2 };
constexpr int kNumClasses = 3;

struct ImageDims {
    int width = 0;
    int height = 0;
};

// Validated; throws ValidationError if either side is < 8.
void validate_dims(const ImageDims& dims);

// Straight line across the image; rows may lie outside [0, H).
struct HorizonLine {
    double left_row = 0.0;
    double right_row = 0.0;

    // Sub-pixel row at column x, linear between column 0 and column W-1.
    double row_at(double x, const ImageDims& dims) const {
        if (dims.width <= 1) return left_row;
        return left_row + (right_row - left_row) * (x / (dims.width - 1));
    }
};

struct EdgePoint {
    double x = 0.0;
    double y = 0.0;
};

// Column-monotone chains of edge points. Within one polyline the x
// coordinates must be strictly increasing.
struct WaterEdge {
    std::vector<std::vector<EdgePoint>> polylines;
};

struct ObstacleBox {
    int id = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive-exclusive
};

struct WeakAnnotation {
    HorizonLine horizon;
    WaterEdge edge;
    std::vector<ObstacleBox> boxes;
};

// Throws ValidationError on malformed boxes, duplicate ids, or
// non-monotone polylines (naming the polyline index).
void validate_annotation(const WeakAnnotation& ann, const ImageDims& dims);

// Per-column rasterized edge row. Uncovered columns are marked.
struct EdgeRowMap {
    std::vector<double> row;       // valid where covered
    std::vector<uint8_t> covered;  // 0/1 per column

    int width() const { return static_cast<int>(row.size()); }
    bool any_covered() const;
};

struct RegionSets {
    Mask above_horizon, below_horizon;  // partition of all pixels
    Mask above_edge, below_edge;        // partition restricted to covered columns
    Grid<int> box_mask;                 // 0 = none, k > 0 = box id (later boxes overwrite)
};

// Linear interpolation of each polyline sampled at integer columns,
// clamped to [0, H]. Uncovered columns stay undefined.
EdgeRowMap rasterize_water_edge(const WaterEdge& edge, const ImageDims& dims);

// Pixel-center convention: (x, y) is above a line at row r iff y + 0.5 < r.
RegionSets region_masks(const WeakAnnotation& ann, const ImageDims& dims);

// Euclidean distance from each above-edge pixel (taken as the point (x, y))
// to the nearest rasterized edge point; +inf outside the above-edge region.
Grid<double> edge_distance_map(const RegionSets& regions, const EdgeRowMap& edge_rows);

// Annotation JSON document (one per image):
//   {"horizon":[l,r], "water_edges":[[[x,y],...],...],
//    "obstacles":[{"id":k,"bbox":[x0,y0,x1,y1]},...]}
std::string annotation_to_json(const WeakAnnotation& ann);
WeakAnnotation annotation_from_json(const std::string& text);
void save_annotation(const std::string& path, const WeakAnnotation& ann);
WeakAnnotation load_annotation(const std::string& path);

}  // namespace slr
