#pragma once

#include "vmtu/ad/ops.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace vmtu {

enum class LayerKind { Conv, BatchNorm, Relu, MaxPool, Upsample, Concat, Add, Sigmoid };

const char* to_string(LayerKind kind);

/// Activation shape without the batch dimension.
struct ActShape {
    int c = 0;
    int h = 0;
    int w = 0;
    friend bool operator==(const ActShape&, const ActShape&) = default;
};

/// One node of a sequential layer graph. Concat and Add also read the output
/// of layer `source`.
struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int kernel = 0;   // Conv only
    int source = -1;  // Concat / Add only
    ActShape in;
    ActShape out;
};

struct NetworkSpec {
    std::string name;
    ActShape input;
    std::vector<LayerSpec> layers;
    int pool_depth = 0;  // number of maxpool2 stages; input sides must divide 2^pool_depth

    ActShape output() const { return layers.empty() ? input : layers.back().out; }
    nlohmann::json to_json() const;
};

/// Incremental builder that shape-checks every layer as it is appended.
class SpecBuilder {
public:
    SpecBuilder(std::string name, ActShape input);

    int conv(int out_channels, int kernel);
    int batch_norm();
    int relu();
    int maxpool();
    int upsample();
    int concat(int source);
    int add(int source);
    int sigmoid();
    /// conv k x k -> BN -> ReLU; returns the ReLU index.
    int conv_bn_relu(int out_channels, int kernel = 3);

    const ActShape& current() const { return current_; }
    NetworkSpec finish();

private:
    int push(LayerSpec layer);
    ActShape output_of(int index) const;

    NetworkSpec spec_;
    ActShape current_;
};

/// UNet with two conv-BN-ReLU per level, maxpool2 down, nearest x2 + 3x3 conv up,
/// skip concatenation and a final 1x1 conv. Throws InputTooSmall unless height
/// and width are divisible by 2^S.
NetworkSpec build_unet(const std::vector<int>& channels, int in_channels, int out_channels,
                       int height = 64, int width = 64);

/// Plain conv-BN-ReLU stack with the widths 128, 4x256, 5x512, 256, 128 and a final
/// 1x1 conv, each width divided by `width_divisor`.
NetworkSpec build_flatcnn(int in_channels = 1, int out_channels = 1, int height = 64, int width = 64,
                          int width_divisor = 1);

/// FlatCNN-width stand-in with residual additions around pairs of convs.
NetworkSpec build_residual_cnn(int in_channels, int out_channels, int height, int width, int width_divisor,
                               int blocks = 4);

/// Dense-concatenation stand-in: every layer sees all previous feature maps.
NetworkSpec build_dense_cnn(int in_channels, int out_channels, int height, int width, int growth,
                            int layers = 6);

/// Trainable scalars: conv weights and biases plus BN scale and shift.
std::int64_t count_params(const NetworkSpec& spec);

/// Parameters and BN statistics of a NetworkSpec, with a tape-based forward.
class Network {
public:
    Network() = default;
    /// He-uniform conv weights from `seed`, zero biases, BN scale 1 and shift 0.
    Network(NetworkSpec spec, std::uint64_t seed, std::string prefix = "net");

    ad::Var forward(ad::Tape& tape, ad::Var x, bool training);

    const NetworkSpec& spec() const noexcept { return spec_; }
    std::vector<ad::Param>& params() noexcept { return params_; }
    const std::vector<ad::Param>& params() const noexcept { return params_; }
    std::vector<ad::BatchNormState>& bn_states() noexcept { return bn_; }
    const std::vector<ad::BatchNormState>& bn_states() const noexcept { return bn_; }

    /// Zeroes every weight and bias and freezes them.
    void zero_and_freeze();

private:
    NetworkSpec spec_;
    std::vector<ad::Param> params_;
    std::vector<ad::BatchNormState> bn_;
    std::vector<int> param_index_;  // first param of each layer, or -1
    std::vector<int> bn_index_;     // BN state of each layer, or -1
};

}  // namespace vmtu
