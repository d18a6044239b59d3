#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/tensor.hpp"

namespace slr {

// Small encoder-decoder segmentation network. Three encoder stages of
// 3x3 conv + tanh, with 2x average pooling after the first log2(stride)
// stages; the second stage output is exposed as the feature map F. The
// decoder is one 3x3 conv + tanh, bilinear upsampling back to input
// resolution and a 1x1 projection to class logits.
struct NetConfig {
    int input_channels = 4;  // 3 = RGB, 4 = RGB + horizon distance channel
    std::array<int, 3> widths = {16, 32, 32};
    int feature_stride = 4;  // 2 or 4
    int classes = 3;
};

void validate_net_config(const NetConfig& cfg);

struct NamedTensor {
    std::string name;
    std::vector<int> dims;
    std::vector<double> v;

    size_t size() const { return v.size(); }
};

struct ModelParams {
    NetConfig cfg;
    std::vector<NamedTensor> tensors;

    NamedTensor& find(const std::string& name);
    const NamedTensor& find(const std::string& name) const;
    size_t total_size() const;
    // FNV-1a over the raw parameter bytes; used to assert fresh
    // re-initialization between training stages.
    uint64_t content_hash() const;
};

// Fan-in scaled uniform init, kernels in [-sqrt(6/fan_in), sqrt(6/fan_in)],
// biases zero. Same seed gives byte-identical parameters.
ModelParams init_params(const NetConfig& cfg, uint64_t seed);

// Gradients aligned with ModelParams::tensors.
struct ParamGrads {
    std::vector<std::vector<double>> g;

    static ParamGrads zeros_like(const ModelParams& params);
    void add(const ParamGrads& other);
    void scale(double s);
};

// Activations cached by forward for the exact backward pass.
struct ForwardPass {
    Field<double> input;
    Field<double> a1, p1;  // stage 1 activation and pooled output
    Field<double> a2, p2;  // stage 2; p2 only used at stride 4
    Field<double> a3;
    Field<double> ad;  // decoder activation at feature resolution
    Field<double> up;  // decoder activation upsampled to image resolution
    Field<double> logits;
    Field<double> probs;
    bool pooled2 = false;

    const Field<double>& features() const { return pooled2 ? p2 : a2; }
};

ForwardPass forward(const ModelParams& params, const Field<double>& input);

// Exact gradients for all parameters. dlogits is required; dfeatures may be
// null and otherwise enters the graph at the feature map output.
ParamGrads backward(const ModelParams& params, const ForwardPass& fp,
                    const Field<double>& dlogits, const Field<double>* dfeatures);

// Stacks the RGB image with the optional normalized signed vertical
// distance to the horizon line ((y + 0.5 - row(x)) / H).
Field<double> make_net_input(const Field<double>& rgb, const NetConfig& cfg,
                             const HorizonLine& horizon);

struct OptimizerConfig {
    double rho = 0.9;       // squared-gradient decay
    double momentum = 0.9;  // momentum on the preconditioned gradient
    double eps = 1e-8;
};

struct OptimizerState {
    std::vector<std::vector<double>> sq_avg;
    std::vector<std::vector<double>> mom;
    int64_t step = 0;

    static OptimizerState zeros_like(const ModelParams& params);
};

// v <- rho v + (1-rho) g^2 ; m <- mu m + g / sqrt(v + eps) ; p <- p - lr m
void rmsprop_step(ModelParams& params, const ParamGrads& grads, OptimizerState& state, double lr,
                  const OptimizerConfig& cfg = {});

double poly_decay(double lr0, int epoch, int total_epochs, double power = 0.9);

// Checkpoint round-trip through the SLRT archive format. The net config is
// stored alongside the parameter tensors.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

// Bilinear resize with half-pixel centers, shared by the decoder and the
// pseudo-label upsampling path.
Field<double> bilinear_resize(const Field<double>& src, int out_h, int out_w);

}  // namespace slr
