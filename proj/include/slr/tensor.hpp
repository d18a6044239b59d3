#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "slr/errors.hpp"

namespace slr {

// Dense row-major H x W plane.
template <typename T>
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    T& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    const T& at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    bool contains(int y, int x) const { return y >= 0 && y < height && x >= 0 && x < width; }
    size_t size() const { return data.size(); }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Grid& o) const {
        return height == o.height && width == o.width && data == o.data;
    }
};

// Dense row-major H x W x C volume, channel-last (channel index varies fastest).
template <typename T>
struct Field {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<T> data;

    Field() = default;
    Field(int h, int w, int c, T fill = T{})
        : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

    T& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    const T& at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    // Pointer to the channel vector of one pixel.
    T* px(int y, int x) { return data.data() + (static_cast<size_t>(y) * width + x) * channels; }
    const T* px(int y, int x) const {
        return data.data() + (static_cast<size_t>(y) * width + x) * channels;
    }

    size_t size() const { return data.size(); }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Field& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    bool operator==(const Field& o) const { return same_shape(o) && data == o.data; }
};

using Mask = Grid<uint8_t>;

inline void require_shape(const Field<double>& f, int h, int w, int c, const std::string& what) {
    if (f.height != h || f.width != w || f.channels != c) {
        throw ShapeError(what + ": expected " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                         std::to_string(c) + ", got " + std::to_string(f.height) + "x" +
                         std::to_string(f.width) + "x" + std::to_string(f.channels));
    }
}

}  // namespace slr
