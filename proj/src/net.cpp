#include "slr/net.hpp"

#include <cmath>
#include <cstring>

#include <json.hpp>

#include "slr/errors.hpp"
#include "slr/rng.hpp"
#include "slr/slrt.hpp"

namespace slr {

namespace {

// --------------------------------------------------------------------------
// Kernels
// --------------------------------------------------------------------------

// 3x3 convolution, zero padding, weight layout [out][ky][kx][in].
void conv3x3_forward(const Field<double>& in, const std::vector<double>& w,
                     const std::vector<double>& b, int out_ch, Field<double>& z) {
    const int H = in.height, W = in.width, C = in.channels;
    z = Field<double>(H, W, out_ch);
    const size_t kstride = static_cast<size_t>(9) * C;
    for (int y = 0; y < H; ++y) {
        const int ky0 = y > 0 ? 0 : 1;
        const int ky1 = y < H - 1 ? 2 : 1;
        for (int x = 0; x < W; ++x) {
            const int kx0 = x > 0 ? 0 : 1;
            const int kx1 = x < W - 1 ? 2 : 1;
            double* zp = z.px(y, x);
            for (int o = 0; o < out_ch; ++o) {
                const double* wo = w.data() + o * kstride;
                double acc = b[o];
                for (int ky = ky0; ky <= ky1; ++ky) {
                    const double* row = in.px(y + ky - 1, x + kx0 - 1);
                    const double* wr = wo + (static_cast<size_t>(ky) * 3 + kx0) * C;
                    for (int kx = kx0; kx <= kx1; ++kx) {
                        for (int c = 0; c < C; ++c) acc += wr[c] * row[c];
                        wr += C;
                        row += C;
                    }
                }
                zp[o] = acc;
            }
        }
    }
}

// Backward for the same convolution. din may be null when the input
// gradient is not needed (first layer). dw/db accumulate in place.
void conv3x3_backward(const Field<double>& in, const std::vector<double>& w, int out_ch,
                      const Field<double>& dz, Field<double>* din, std::vector<double>& dw,
                      std::vector<double>& db) {
    const int H = in.height, W = in.width, C = in.channels;
    const size_t kstride = static_cast<size_t>(9) * C;
    if (din) *din = Field<double>(H, W, C, 0.0);
    for (int y = 0; y < H; ++y) {
        const int ky0 = y > 0 ? 0 : 1;
        const int ky1 = y < H - 1 ? 2 : 1;
        for (int x = 0; x < W; ++x) {
            const int kx0 = x > 0 ? 0 : 1;
            const int kx1 = x < W - 1 ? 2 : 1;
            const double* gz = dz.px(y, x);
            for (int o = 0; o < out_ch; ++o) {
                const double g = gz[o];
                if (g == 0.0) continue;
                const double* wo = w.data() + o * kstride;
                double* dwo = dw.data() + o * kstride;
                db[o] += g;
                for (int ky = ky0; ky <= ky1; ++ky) {
                    const double* row = in.px(y + ky - 1, x + kx0 - 1);
                    double* drow = din ? din->px(y + ky - 1, x + kx0 - 1) : nullptr;
                    const size_t base = (static_cast<size_t>(ky) * 3 + kx0) * C;
                    const double* wr = wo + base;
                    double* dwr = dwo + base;
                    for (int kx = kx0; kx <= kx1; ++kx) {
                        for (int c = 0; c < C; ++c) {
                            dwr[c] += g * row[c];
                            if (drow) drow[c] += g * wr[c];
                        }
                        wr += C;
                        dwr += C;
                        row += C;
                        if (drow) drow += C;
                    }
                }
            }
        }
    }
}

void tanh_inplace(Field<double>& z) {
    for (double& v : z.data) v = std::tanh(v);
}

// dZ = dA * (1 - a^2), computed in place on da.
void tanh_backward_inplace(const Field<double>& a, Field<double>& da) {
    for (size_t i = 0; i < a.data.size(); ++i) da.data[i] *= 1.0 - a.data[i] * a.data[i];
}

Field<double> avgpool2(const Field<double>& a, const std::string& layer) {
    if (a.height % 2 != 0 || a.width % 2 != 0) {
        throw ShapeError(layer + ": input " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " not divisible by 2");
    }
    Field<double> p(a.height / 2, a.width / 2, a.channels);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double* pp = p.px(y, x);
            const double* r00 = a.px(2 * y, 2 * x);
            const double* r01 = a.px(2 * y, 2 * x + 1);
            const double* r10 = a.px(2 * y + 1, 2 * x);
            const double* r11 = a.px(2 * y + 1, 2 * x + 1);
            for (int c = 0; c < a.channels; ++c) pp[c] = 0.25 * (r00[c] + r01[c] + r10[c] + r11[c]);
        }
    }
    return p;
}

Field<double> avgpool2_backward(const Field<double>& dp) {
    Field<double> da(dp.height * 2, dp.width * 2, dp.channels);
    for (int y = 0; y < dp.height; ++y) {
        for (int x = 0; x < dp.width; ++x) {
            const double* gp = dp.px(y, x);
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    double* ap = da.px(2 * y + dy, 2 * x + dx);
                    for (int c = 0; c < dp.channels; ++c) ap[c] = 0.25 * gp[c];
                }
            }
        }
    }
    return da;
}

struct ResizeAxis {
    std::vector<int> i0, i1;
    std::vector<double> t;
};

ResizeAxis resize_axis(int out_n, int in_n) {
    ResizeAxis ax;
    ax.i0.resize(out_n);
    ax.i1.resize(out_n);
    ax.t.resize(out_n);
    const double scale = static_cast<double>(in_n) / out_n;
    for (int i = 0; i < out_n; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        double f = std::floor(src);
        int lo = static_cast<int>(f);
        double t = src - f;
        if (lo < 0) {
            lo = 0;
            t = 0.0;
        }
        int hi = lo + 1;
        if (hi > in_n - 1) {
            hi = in_n - 1;
            t = 0.0;
        }
        ax.i0[i] = lo;
        ax.i1[i] = hi;
        ax.t[i] = t;
    }
    return ax;
}

Field<double> bilinear_backward(const Field<double>& dout, int in_h, int in_w) {
    ResizeAxis ay = resize_axis(dout.height, in_h);
    ResizeAxis ax = resize_axis(dout.width, in_w);
    Field<double> din(in_h, in_w, dout.channels, 0.0);
    for (int y = 0; y < dout.height; ++y) {
        for (int x = 0; x < dout.width; ++x) {
            const double* g = dout.px(y, x);
            const double wy1 = ay.t[y], wy0 = 1.0 - wy1;
            const double wx1 = ax.t[x], wx0 = 1.0 - wx1;
            double* d00 = din.px(ay.i0[y], ax.i0[x]);
            double* d01 = din.px(ay.i0[y], ax.i1[x]);
            double* d10 = din.px(ay.i1[y], ax.i0[x]);
            double* d11 = din.px(ay.i1[y], ax.i1[x]);
            for (int c = 0; c < dout.channels; ++c) {
                d00[c] += wy0 * wx0 * g[c];
                d01[c] += wy0 * wx1 * g[c];
                d10[c] += wy1 * wx0 * g[c];
                d11[c] += wy1 * wx1 * g[c];
            }
        }
    }
    return din;
}

void head_forward(const Field<double>& u, const std::vector<double>& w,
                  const std::vector<double>& b, int classes, Field<double>& logits) {
    const int C = u.channels;
    logits = Field<double>(u.height, u.width, classes);
    for (int y = 0; y < u.height; ++y) {
        for (int x = 0; x < u.width; ++x) {
            const double* up = u.px(y, x);
            double* lp = logits.px(y, x);
            for (int o = 0; o < classes; ++o) {
                const double* wo = w.data() + static_cast<size_t>(o) * C;
                double acc = b[o];
                for (int c = 0; c < C; ++c) acc += wo[c] * up[c];
                lp[o] = acc;
            }
        }
    }
}

int pool_count(int stride) { return stride == 2 ? 1 : 2; }

}  // namespace

// --------------------------------------------------------------------------
// Config / params
// --------------------------------------------------------------------------

void validate_net_config(const NetConfig& cfg) {
    if (cfg.input_channels != 3 && cfg.input_channels != 4) {
        throw ConfigError("input_channels must be 3 or 4");
    }
    if (cfg.feature_stride != 2 && cfg.feature_stride != 4) {
        throw ConfigError("feature_stride must be 2 or 4");
    }
    for (int w : cfg.widths) {
        if (w < 1) throw ConfigError("stage widths must be positive");
    }
    if (cfg.classes != 3) throw ConfigError("classes must be 3");
}

NamedTensor& ModelParams::find(const std::string& name) {
    for (auto& t : tensors)
        if (t.name == name) return t;
    throw ShapeError("no parameter tensor named " + name);
}

const NamedTensor& ModelParams::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw ShapeError("no parameter tensor named " + name);
}

size_t ModelParams::total_size() const {
    size_t n = 0;
    for (const auto& t : tensors) n += t.v.size();
    return n;
}

uint64_t ModelParams::content_hash() const {
    uint64_t h = 1469598103934665603ull;
    auto mix_bytes = [&h](const void* p, size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& t : tensors) {
        mix_bytes(t.name.data(), t.name.size());
        mix_bytes(t.v.data(), t.v.size() * sizeof(double));
    }
    return h;
}

ModelParams init_params(const NetConfig& cfg, uint64_t seed) {
    validate_net_config(cfg);
    ModelParams p;
    p.cfg = cfg;
    Rng rng(seed);

    auto add_conv = [&](const std::string& name, int out, int in, int k) {
        NamedTensor w;
        w.name = name + ".w";
        w.dims = {out, k, k, in};
        w.v.resize(static_cast<size_t>(out) * k * k * in);
        const double bound = std::sqrt(6.0 / (static_cast<double>(k) * k * in));
        for (double& v : w.v) v = rng.uniform(-bound, bound);
        p.tensors.push_back(std::move(w));
        NamedTensor b;
        b.name = name + ".b";
        b.dims = {out};
        b.v.assign(static_cast<size_t>(out), 0.0);
        p.tensors.push_back(std::move(b));
    };

    add_conv("enc1", cfg.widths[0], cfg.input_channels, 3);
    add_conv("enc2", cfg.widths[1], cfg.widths[0], 3);
    add_conv("enc3", cfg.widths[2], cfg.widths[1], 3);
    add_conv("dec", cfg.widths[0], cfg.widths[2], 3);
    add_conv("head", cfg.classes, cfg.widths[0], 1);
    return p;
}

ParamGrads ParamGrads::zeros_like(const ModelParams& params) {
    ParamGrads g;
    g.g.reserve(params.tensors.size());
    for (const auto& t : params.tensors) g.g.emplace_back(t.v.size(), 0.0);
    return g;
}

void ParamGrads::add(const ParamGrads& other) {
    for (size_t i = 0; i < g.size(); ++i)
        for (size_t j = 0; j < g[i].size(); ++j) g[i][j] += other.g[i][j];
}

void ParamGrads::scale(double s) {
    for (auto& t : g)
        for (double& v : t) v *= s;
}

// --------------------------------------------------------------------------
// Forward / backward
// --------------------------------------------------------------------------

ForwardPass forward(const ModelParams& params, const Field<double>& input) {
    const NetConfig& cfg = params.cfg;
    if (input.channels != cfg.input_channels) {
        throw ShapeError("enc1: input has " + std::to_string(input.channels) +
                         " channels, config expects " + std::to_string(cfg.input_channels));
    }
    if (input.height % cfg.feature_stride != 0 || input.width % cfg.feature_stride != 0) {
        throw ShapeError("enc1: input " + std::to_string(input.height) + "x" +
                         std::to_string(input.width) + " not divisible by stride " +
                         std::to_string(cfg.feature_stride));
    }
    const int pools = pool_count(cfg.feature_stride);

    ForwardPass fp;
    fp.input = input;

    conv3x3_forward(fp.input, params.find("enc1.w").v, params.find("enc1.b").v, cfg.widths[0],
                    fp.a1);
    tanh_inplace(fp.a1);
    fp.p1 = avgpool2(fp.a1, "enc1.pool");

    conv3x3_forward(fp.p1, params.find("enc2.w").v, params.find("enc2.b").v, cfg.widths[1], fp.a2);
    tanh_inplace(fp.a2);
    fp.pooled2 = pools == 2;
    if (fp.pooled2) fp.p2 = avgpool2(fp.a2, "enc2.pool");

    const Field<double>& feat = fp.features();
    conv3x3_forward(feat, params.find("enc3.w").v, params.find("enc3.b").v, cfg.widths[2], fp.a3);
    tanh_inplace(fp.a3);

    conv3x3_forward(fp.a3, params.find("dec.w").v, params.find("dec.b").v, cfg.widths[0], fp.ad);
    tanh_inplace(fp.ad);

    fp.up = bilinear_resize(fp.ad, input.height, input.width);
    head_forward(fp.up, params.find("head.w").v, params.find("head.b").v, cfg.classes, fp.logits);

    // Per-pixel softmax with max subtraction.
    fp.probs = Field<double>(input.height, input.width, cfg.classes);
    for (int y = 0; y < input.height; ++y) {
        for (int x = 0; x < input.width; ++x) {
            const double* lp = fp.logits.px(y, x);
            double* pp = fp.probs.px(y, x);
            double m = lp[0];
            for (int c = 1; c < cfg.classes; ++c) m = std::max(m, lp[c]);
            double s = 0.0;
            for (int c = 0; c < cfg.classes; ++c) {
                pp[c] = std::exp(lp[c] - m);
                s += pp[c];
            }
            for (int c = 0; c < cfg.classes; ++c) pp[c] /= s;
        }
    }
    return fp;
}

ParamGrads backward(const ModelParams& params, const ForwardPass& fp,
                    const Field<double>& dlogits, const Field<double>* dfeatures) {
    const NetConfig& cfg = params.cfg;
    ParamGrads grads = ParamGrads::zeros_like(params);
    auto gref = [&](const std::string& name) -> std::vector<double>& {
        for (size_t i = 0; i < params.tensors.size(); ++i) {
            if (params.tensors[i].name == name) return grads.g[i];
        }
        throw ShapeError("no parameter tensor named " + name);
    };

    // Head (1x1 conv).
    const int C = fp.up.channels;
    Field<double> dup(fp.up.height, fp.up.width, C, 0.0);
    {
        const std::vector<double>& hw = params.find("head.w").v;
        std::vector<double>& dhw = gref("head.w");
        std::vector<double>& dhb = gref("head.b");
        for (int y = 0; y < fp.up.height; ++y) {
            for (int x = 0; x < fp.up.width; ++x) {
                const double* g = dlogits.px(y, x);
                const double* up = fp.up.px(y, x);
                double* du = dup.px(y, x);
                for (int o = 0; o < cfg.classes; ++o) {
                    const double go = g[o];
                    if (go == 0.0) continue;
                    dhb[o] += go;
                    const double* wo = hw.data() + static_cast<size_t>(o) * C;
                    double* dwo = dhw.data() + static_cast<size_t>(o) * C;
                    for (int c = 0; c < C; ++c) {
                        dwo[c] += go * up[c];
                        du[c] += go * wo[c];
                    }
                }
            }
        }
    }

    // Upsample transpose, decoder conv.
    Field<double> dad = bilinear_backward(dup, fp.ad.height, fp.ad.width);
    tanh_backward_inplace(fp.ad, dad);
    Field<double> da3;
    conv3x3_backward(fp.a3, params.find("dec.w").v, cfg.widths[0], dad, &da3, gref("dec.w"),
                     gref("dec.b"));

    // Stage 3.
    tanh_backward_inplace(fp.a3, da3);
    Field<double> dfeat;
    conv3x3_backward(fp.features(), params.find("enc3.w").v, cfg.widths[2], da3, &dfeat,
                     gref("enc3.w"), gref("enc3.b"));

    // External feature gradient joins at the feature tap.
    if (dfeatures) {
        if (!dfeatures->same_shape(dfeat)) throw ShapeError("feature gradient shape mismatch");
        for (size_t i = 0; i < dfeat.data.size(); ++i) dfeat.data[i] += dfeatures->data[i];
    }

    // Stage 2.
    Field<double> da2 = fp.pooled2 ? avgpool2_backward(dfeat) : std::move(dfeat);
    tanh_backward_inplace(fp.a2, da2);
    Field<double> dp1;
    conv3x3_backward(fp.p1, params.find("enc2.w").v, cfg.widths[1], da2, &dp1, gref("enc2.w"),
                     gref("enc2.b"));

    // Stage 1.
    Field<double> da1 = avgpool2_backward(dp1);
    tanh_backward_inplace(fp.a1, da1);
    conv3x3_backward(fp.input, params.find("enc1.w").v, cfg.widths[0], da1, nullptr, gref("enc1.w"),
                     gref("enc1.b"));

    return grads;
}

Field<double> make_net_input(const Field<double>& rgb, const NetConfig& cfg,
                             const HorizonLine& horizon) {
    if (rgb.channels != 3) throw ShapeError("make_net_input: expected RGB image");
    if (cfg.input_channels == 3) return rgb;
    Field<double> input(rgb.height, rgb.width, 4);
    ImageDims dims{rgb.width, rgb.height};
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            const double* src = rgb.px(y, x);
            double* dst = input.px(y, x);
            dst[0] = src[0];
            dst[1] = src[1];
            dst[2] = src[2];
            dst[3] = (y + 0.5 - horizon.row_at(x, dims)) / rgb.height;
        }
    }
    return input;
}

// --------------------------------------------------------------------------
// Optimizer
// --------------------------------------------------------------------------

OptimizerState OptimizerState::zeros_like(const ModelParams& params) {
    OptimizerState s;
    for (const auto& t : params.tensors) {
        s.sq_avg.emplace_back(t.v.size(), 0.0);
        s.mom.emplace_back(t.v.size(), 0.0);
    }
    return s;
}

void rmsprop_step(ModelParams& params, const ParamGrads& grads, OptimizerState& state, double lr,
                  const OptimizerConfig& cfg) {
    for (size_t i = 0; i < params.tensors.size(); ++i) {
        auto& p = params.tensors[i].v;
        const auto& g = grads.g[i];
        auto& v = state.sq_avg[i];
        auto& m = state.mom[i];
        for (size_t j = 0; j < p.size(); ++j) {
            v[j] = cfg.rho * v[j] + (1.0 - cfg.rho) * g[j] * g[j];
            m[j] = cfg.momentum * m[j] + g[j] / std::sqrt(v[j] + cfg.eps);
            p[j] -= lr * m[j];
        }
    }
    ++state.step;
}

double poly_decay(double lr0, int epoch, int total_epochs, double power) {
    if (epoch < 0 || epoch > total_epochs || total_epochs <= 0) {
        throw ConfigError("poly_decay: epoch out of range");
    }
    return lr0 * std::pow(1.0 - static_cast<double>(epoch) / total_epochs, power);
}

// --------------------------------------------------------------------------
// Checkpoints
// --------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::vector<SlrtTensor> tensors;
    nlohmann::json cfg;
    cfg["input_channels"] = params.cfg.input_channels;
    cfg["widths"] = params.cfg.widths;
    cfg["feature_stride"] = params.cfg.feature_stride;
    cfg["classes"] = params.cfg.classes;
    std::string cfg_text = cfg.dump();
    SlrtTensor meta;
    meta.name = "net_config";
    meta.dtype = Dtype::U8;
    meta.dims = {static_cast<uint32_t>(cfg_text.size())};
    meta.u8.assign(cfg_text.begin(), cfg_text.end());
    tensors.push_back(std::move(meta));

    for (const auto& t : params.tensors) {
        SlrtTensor s;
        s.name = t.name;
        s.dtype = Dtype::F64;
        for (int d : t.dims) s.dims.push_back(static_cast<uint32_t>(d));
        s.f64 = t.v;
        tensors.push_back(std::move(s));
    }
    write_slrt_archive(path, tensors);
}

ModelParams load_checkpoint(const std::string& path) {
    std::vector<SlrtTensor> tensors = read_slrt_archive(path);
    NetConfig cfg;
    bool have_cfg = false;
    for (const auto& t : tensors) {
        if (t.name == "net_config") {
            nlohmann::json j = nlohmann::json::parse(std::string(t.u8.begin(), t.u8.end()));
            cfg.input_channels = j.at("input_channels").get<int>();
            auto widths = j.at("widths").get<std::vector<int>>();
            if (widths.size() != 3) throw IoError(path + ": bad widths in checkpoint");
            std::copy(widths.begin(), widths.end(), cfg.widths.begin());
            cfg.feature_stride = j.at("feature_stride").get<int>();
            cfg.classes = j.at("classes").get<int>();
            have_cfg = true;
        }
    }
    if (!have_cfg) throw IoError(path + ": checkpoint has no net_config entry");

    ModelParams ref = init_params(cfg, 0);
    ModelParams out;
    out.cfg = cfg;
    for (const auto& want : ref.tensors) {
        bool found = false;
        for (const auto& t : tensors) {
            if (t.name != want.name) continue;
            if (t.dtype != Dtype::F64 || t.f64.size() != want.v.size()) {
                throw IoError(path + ": tensor " + t.name + " has unexpected shape or dtype");
            }
            NamedTensor nt;
            nt.name = want.name;
            nt.dims = want.dims;
            nt.v = t.f64;
            out.tensors.push_back(std::move(nt));
            found = true;
            break;
        }
        if (!found) throw IoError(path + ": checkpoint missing tensor " + want.name);
    }
    return out;
}

Field<double> bilinear_resize(const Field<double>& src, int out_h, int out_w) {
    ResizeAxis ay = resize_axis(out_h, src.height);
    ResizeAxis ax = resize_axis(out_w, src.width);
    Field<double> dst(out_h, out_w, src.channels);
    for (int y = 0; y < out_h; ++y) {
        const double wy1 = ay.t[y], wy0 = 1.0 - wy1;
        for (int x = 0; x < out_w; ++x) {
            const double wx1 = ax.t[x], wx0 = 1.0 - wx1;
            const double* s00 = src.px(ay.i0[y], ax.i0[x]);
            const double* s01 = src.px(ay.i0[y], ax.i1[x]);
            const double* s10 = src.px(ay.i1[y], ax.i0[x]);
            const double* s11 = src.px(ay.i1[y], ax.i1[x]);
            double* d = dst.px(y, x);
            for (int c = 0; c < src.channels; ++c) {
                d[c] = wy0 * (wx0 * s00[c] + wx1 * s01[c]) + wy1 * (wx0 * s10[c] + wx1 * s11[c]);
            }
        }
    }
    return dst;
}

}  // namespace slr
