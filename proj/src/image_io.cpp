#include "slr/image_io.hpp"

#include <cmath>
#include <fstream>

#include "slr/errors.hpp"

namespace slr {

namespace {

uint8_t quantize(double v) {
    double x = std::lround(std::fmin(1.0, std::fmax(0.0, v)) * 255.0);
    return static_cast<uint8_t>(x);
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !isspace(c)) tok.push_back(static_cast<char>(in.get()));
            return tok;
        }
    }
    return tok;
}

void read_header(std::istream& in, const std::string& path, const char* magic, int& w, int& h) {
    if (next_token(in) != magic) throw IoError(path + ": expected " + magic + " header");
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    int maxval = std::stoi(next_token(in));
    if (maxval != 255) throw IoError(path + ": only maxval 255 supported");
    in.get();  // single whitespace before payload
}

}  // namespace

void write_ppm(const std::string& path, const Field<double>& rgb) {
    if (rgb.channels != 3) throw ShapeError("write_ppm: need 3 channels");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(rgb.width) * 3);
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = quantize(rgb.at(y, x, c));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed on " + path);
}

Field<double> read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int w = 0, h = 0;
    read_header(in, path, "P6", w, h);
    Field<double> rgb(h, w, 3);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw IoError("short read on " + path);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = row[static_cast<size_t>(x) * 3 + c] / 255.0;
        }
    }
    return rgb;
}

void write_pgm(const std::string& path, const Grid<uint8_t>& ids) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << ids.width << " " << ids.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(ids.data.data()),
              static_cast<std::streamsize>(ids.data.size()));
    if (!out) throw IoError("write failed on " + path);
}

Grid<uint8_t> read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int w = 0, h = 0;
    read_header(in, path, "P5", w, h);
    Grid<uint8_t> ids(h, w);
    in.read(reinterpret_cast<char*>(ids.data.data()), static_cast<std::streamsize>(ids.data.size()));
    if (!in) throw IoError("short read on " + path);
    return ids;
}

}  // namespace slr
