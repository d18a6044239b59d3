#include "slr/slrt.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "slr/errors.hpp"

namespace slr {

namespace {

using nlohmann::json;

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint16_t get_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

const void* payload_ptr(const SlrtTensor& t) {
    switch (t.dtype) {
        case Dtype::F32: return t.f32.data();
        case Dtype::F64: return t.f64.data();
        case Dtype::U8: return t.u8.data();
    }
    return nullptr;
}

size_t payload_elems(const SlrtTensor& t) {
    switch (t.dtype) {
        case Dtype::F32: return t.f32.size();
        case Dtype::F64: return t.f64.size();
        case Dtype::U8: return t.u8.size();
    }
    return 0;
}

std::string header_bytes(const SlrtTensor& t) {
    std::string h = "SLRT";
    put_u16(h, 1);
    h.push_back(static_cast<char>(t.dtype));
    h.push_back(static_cast<char>(t.dims.size()));
    for (uint32_t d : t.dims) put_u32(h, d);
    return h;
}

void check_payload(const SlrtTensor& t, const std::string& what) {
    if (payload_elems(t) != t.element_count()) {
        throw IoError(what + ": payload has " + std::to_string(payload_elems(t)) +
                      " elements, dims require " + std::to_string(t.element_count()));
    }
}

SlrtTensor parse_tensor_payload(Dtype dtype, const std::vector<uint32_t>& dims,
                                const unsigned char* bytes, size_t nbytes,
                                const std::string& what) {
    SlrtTensor t;
    t.dtype = dtype;
    t.dims = dims;
    size_t n = t.element_count();
    if (nbytes != n * dtype_size(dtype)) {
        throw IoError(what + ": payload length " + std::to_string(nbytes) + " does not match dims (" +
                      std::to_string(n * dtype_size(dtype)) + " bytes expected)");
    }
    switch (dtype) {
        case Dtype::F32:
            t.f32.resize(n);
            std::memcpy(t.f32.data(), bytes, nbytes);
            break;
        case Dtype::F64:
            t.f64.resize(n);
            std::memcpy(t.f64.data(), bytes, nbytes);
            break;
        case Dtype::U8:
            t.u8.assign(bytes, bytes + nbytes);
            break;
    }
    return t;
}

Dtype parse_dtype(int code, const std::string& what) {
    if (code < 1 || code > 3) throw IoError(what + ": unknown dtype code " + std::to_string(code));
    return static_cast<Dtype>(code);
}

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    in.seekg(0, std::ios::end);
    std::streamoff len = in.tellg();
    in.seekg(0);
    std::vector<unsigned char> buf(static_cast<size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(buf.data()), len);
    if (!in) throw IoError("short read on " + path);
    return buf;
}

void write_all(const std::string& path, const std::string& head, const void* payload,
               size_t nbytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    if (nbytes > 0) out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(nbytes));
    if (!out) throw IoError("write failed on " + path);
}

}  // namespace

size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::F32: return 4;
        case Dtype::F64: return 8;
        case Dtype::U8: return 1;
    }
    return 0;
}

size_t SlrtTensor::element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

void write_slrt(const std::string& path, const SlrtTensor& t) {
    check_payload(t, path);
    write_all(path, header_bytes(t), payload_ptr(t), t.element_count() * dtype_size(t.dtype));
}

SlrtTensor read_slrt(const std::string& path) {
    std::vector<unsigned char> buf = read_all(path);
    if (buf.size() < 8 || std::memcmp(buf.data(), "SLRT", 4) != 0) {
        throw IoError(path + ": not an SLRT tensor file");
    }
    uint16_t version = get_u16(buf.data() + 4);
    if (version != 1) throw IoError(path + ": unsupported SLRT version " + std::to_string(version));
    Dtype dtype = parse_dtype(buf[6], path);
    size_t ndim = buf[7];
    size_t off = 8;
    if (buf.size() < off + 4 * ndim) throw IoError(path + ": truncated header");
    std::vector<uint32_t> dims(ndim);
    for (size_t i = 0; i < ndim; ++i) dims[i] = get_u32(buf.data() + off + 4 * i);
    off += 4 * ndim;
    return parse_tensor_payload(dtype, dims, buf.data() + off, buf.size() - off, path);
}

void write_slrt_archive(const std::string& path, const std::vector<SlrtTensor>& tensors) {
    json index = json::array();
    size_t offset = 0;
    for (const auto& t : tensors) {
        check_payload(t, path + ":" + t.name);
        size_t nbytes = t.element_count() * dtype_size(t.dtype);
        index.push_back({{"name", t.name},
                         {"dtype", static_cast<int>(t.dtype)},
                         {"dims", t.dims},
                         {"offset", offset}});
        offset += nbytes;
    }
    std::string idx = index.dump();
    std::string head = "SLRA";
    put_u16(head, 1);
    put_u32(head, static_cast<uint32_t>(idx.size()));
    head += idx;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& t : tensors) {
        size_t nbytes = t.element_count() * dtype_size(t.dtype);
        out.write(static_cast<const char*>(payload_ptr(t)), static_cast<std::streamsize>(nbytes));
    }
    if (!out) throw IoError("write failed on " + path);
}

std::vector<SlrtTensor> read_slrt_archive(const std::string& path) {
    std::vector<unsigned char> buf = read_all(path);
    if (buf.size() < 10 || std::memcmp(buf.data(), "SLRA", 4) != 0) {
        throw IoError(path + ": not an SLRT archive");
    }
    uint16_t version = get_u16(buf.data() + 4);
    if (version != 1) throw IoError(path + ": unsupported archive version " + std::to_string(version));
    uint32_t idx_len = get_u32(buf.data() + 6);
    size_t payload_start = 10 + static_cast<size_t>(idx_len);
    if (buf.size() < payload_start) throw IoError(path + ": truncated index");
    json index;
    try {
        index = json::parse(buf.begin() + 10, buf.begin() + static_cast<std::ptrdiff_t>(payload_start));
    } catch (const json::exception& e) {
        throw IoError(path + ": bad archive index: " + e.what());
    }

    std::vector<SlrtTensor> out;
    size_t payload_len = buf.size() - payload_start;
    for (const auto& entry : index) {
        Dtype dtype = parse_dtype(entry.at("dtype").get<int>(), path);
        std::vector<uint32_t> dims = entry.at("dims").get<std::vector<uint32_t>>();
        size_t offset = entry.at("offset").get<size_t>();
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        size_t nbytes = (dims.empty() ? 0 : n) * dtype_size(dtype);
        if (offset + nbytes > payload_len) throw IoError(path + ": tensor payload out of range");
        SlrtTensor t = parse_tensor_payload(dtype, dims, buf.data() + payload_start + offset, nbytes,
                                            path);
        t.name = entry.at("name").get<std::string>();
        out.push_back(std::move(t));
    }
    return out;
}

SlrtTensor to_f32_tensor(const Field<double>& f) {
    SlrtTensor t;
    t.dtype = Dtype::F32;
    t.dims = {static_cast<uint32_t>(f.height), static_cast<uint32_t>(f.width),
              static_cast<uint32_t>(f.channels)};
    t.f32.assign(f.data.begin(), f.data.end());
    return t;
}

SlrtTensor to_f32_tensor(const Grid<double>& g) {
    SlrtTensor t;
    t.dtype = Dtype::F32;
    t.dims = {static_cast<uint32_t>(g.height), static_cast<uint32_t>(g.width)};
    t.f32.assign(g.data.begin(), g.data.end());
    return t;
}

Field<double> field_from_tensor(const SlrtTensor& t) {
    if (t.dims.size() != 3) throw IoError("expected rank-3 tensor, got rank " + std::to_string(t.dims.size()));
    Field<double> f(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                    static_cast<int>(t.dims[2]));
    if (t.dtype == Dtype::F32) {
        f.data.assign(t.f32.begin(), t.f32.end());
    } else if (t.dtype == Dtype::F64) {
        f.data = t.f64;
    } else {
        throw IoError("expected float tensor");
    }
    return f;
}

Grid<double> grid_from_tensor(const SlrtTensor& t) {
    if (t.dims.size() != 2) throw IoError("expected rank-2 tensor, got rank " + std::to_string(t.dims.size()));
    Grid<double> g(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    if (t.dtype == Dtype::F32) {
        g.data.assign(t.f32.begin(), t.f32.end());
    } else if (t.dtype == Dtype::F64) {
        g.data = t.f64;
    } else {
        throw IoError("expected float tensor");
    }
    return g;
}

}  // namespace slr
