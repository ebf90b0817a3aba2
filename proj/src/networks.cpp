#include "vmtu/networks.hpp"

#include "vmtu/error.hpp"

#include <cmath>

namespace vmtu {

const char* to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::Conv:
        return "conv";
    case LayerKind::BatchNorm:
        return "batch_norm";
    case LayerKind::Relu:
        return "relu";
    case LayerKind::MaxPool:
        return "maxpool2";
    case LayerKind::Upsample:
        return "upsample_nearest2";
    case LayerKind::Concat:
        return "concat";
    case LayerKind::Add:
        return "add";
    case LayerKind::Sigmoid:
        return "sigmoid";
    }
    return "?";
}

nlohmann::json NetworkSpec::to_json() const
{
    auto shape = [](const ActShape& s) { return nlohmann::json::array({s.c, s.h, s.w}); };
    nlohmann::json layers_json = nlohmann::json::array();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        nlohmann::json j{{"index", i}, {"kind", to_string(l.kind)}, {"in", shape(l.in)}, {"out", shape(l.out)}};
        if (l.kind == LayerKind::Conv)
            j["kernel"] = l.kernel;
        if (l.source >= 0)
            j["source"] = l.source;
        layers_json.push_back(std::move(j));
    }
    return {{"name", name},
            {"input", shape(input)},
            {"output", shape(output())},
            {"pool_depth", pool_depth},
            {"params", count_params(*this)},
            {"layers", std::move(layers_json)}};
}

SpecBuilder::SpecBuilder(std::string name, ActShape input) : current_(input)
{
    if (input.c < 1 || input.h < 1 || input.w < 1)
        throw InvalidArgument("network input shape must be positive");
    spec_.name = std::move(name);
    spec_.input = input;
}

int SpecBuilder::push(LayerSpec layer)
{
    layer.in = current_;
    switch (layer.kind) {
    case LayerKind::Conv:
        if (layer.kernel < 1 || layer.kernel % 2 == 0 || layer.out.c < 1)
            throw InvalidArgument("conv layers need an odd kernel and positive width");
        layer.out = {layer.out.c, current_.h, current_.w};
        break;
    case LayerKind::MaxPool:
        if (current_.h % 2 != 0 || current_.w % 2 != 0 || current_.h < 2 || current_.w < 2)
            throw InputTooSmall("maxpool2 on a " + std::to_string(current_.h) + "x" +
                                std::to_string(current_.w) + " activation");
        layer.out = {current_.c, current_.h / 2, current_.w / 2};
        ++spec_.pool_depth;
        break;
    case LayerKind::Upsample:
        layer.out = {current_.c, current_.h * 2, current_.w * 2};
        break;
    case LayerKind::Concat: {
        const ActShape s = output_of(layer.source);
        if (s.h != current_.h || s.w != current_.w)
            throw ShapeMismatch("concat source has a different spatial size");
        layer.out = {current_.c + s.c, current_.h, current_.w};
        break;
    }
    case LayerKind::Add:
        if (output_of(layer.source) != current_)
            throw ShapeMismatch("add source shape differs from the running activation");
        layer.out = current_;
        break;
    default:
        layer.out = current_;
        break;
    }
    current_ = layer.out;
    spec_.layers.push_back(layer);
    return static_cast<int>(spec_.layers.size()) - 1;
}

ActShape SpecBuilder::output_of(int index) const
{
    if (index < 0 || index >= static_cast<int>(spec_.layers.size()))
        throw InvalidArgument("layer source index out of range");
    return spec_.layers[static_cast<std::size_t>(index)].out;
}

int SpecBuilder::conv(int out_channels, int kernel)
{
    LayerSpec l;
    l.kind = LayerKind::Conv;
    l.kernel = kernel;
    l.out.c = out_channels;
    return push(l);
}

int SpecBuilder::batch_norm() { return push({LayerKind::BatchNorm, 0, -1, {}, {}}); }
int SpecBuilder::relu() { return push({LayerKind::Relu, 0, -1, {}, {}}); }
int SpecBuilder::maxpool() { return push({LayerKind::MaxPool, 0, -1, {}, {}}); }
int SpecBuilder::upsample() { return push({LayerKind::Upsample, 0, -1, {}, {}}); }
int SpecBuilder::concat(int source) { return push({LayerKind::Concat, 0, source, {}, {}}); }
int SpecBuilder::add(int source) { return push({LayerKind::Add, 0, source, {}, {}}); }
int SpecBuilder::sigmoid() { return push({LayerKind::Sigmoid, 0, -1, {}, {}}); }

int SpecBuilder::conv_bn_relu(int out_channels, int kernel)
{
    conv(out_channels, kernel);
    batch_norm();
    return relu();
}

NetworkSpec SpecBuilder::finish() { return spec_; }

NetworkSpec build_unet(const std::vector<int>& channels, int in_channels, int out_channels, int height,
                       int width)
{
    if (channels.empty())
        throw InvalidArgument("channels vector must have at least one entry");
    for (int c : channels)
        if (c < 1)
            throw InvalidArgument("channel counts must be positive");
    if (in_channels < 1 || out_channels < 1)
        throw InvalidArgument("in/out channels must be >= 1");
    const int S = static_cast<int>(channels.size());
    if (S >= 30 || height % (1 << S) != 0 || width % (1 << S) != 0)
        throw InputTooSmall("UNet with " + std::to_string(S) + " levels needs H and W divisible by " +
                            std::to_string(1L << std::min(S, 30)) + ", got " + std::to_string(height) +
                            "x" + std::to_string(width));

    SpecBuilder b("unet", {in_channels, height, width});
    std::vector<int> skips;
    for (int c : channels) {
        b.conv_bn_relu(c);
        skips.push_back(b.conv_bn_relu(c));
        b.maxpool();
    }
    b.conv_bn_relu(2 * channels.back());
    b.conv_bn_relu(2 * channels.back());
    for (int s = S - 1; s >= 0; --s) {
        const int c = channels[static_cast<std::size_t>(s)];
        b.upsample();
        b.conv(c, 3);
        b.concat(skips[static_cast<std::size_t>(s)]);
        b.conv_bn_relu(c);
        b.conv_bn_relu(c);
    }
    b.conv(out_channels, 1);
    return b.finish();
}

namespace {

int scaled(int width, int divisor) { return std::max(1, width / divisor); }

}  // namespace

NetworkSpec build_flatcnn(int in_channels, int out_channels, int height, int width, int width_divisor)
{
    if (width_divisor < 1)
        throw InvalidArgument("width divisor must be >= 1");
    SpecBuilder b(width_divisor == 1 ? "flatcnn" : "flatcnn/" + std::to_string(width_divisor),
                  {in_channels, height, width});
    b.conv_bn_relu(scaled(128, width_divisor));
    for (int i = 0; i < 4; ++i)
        b.conv_bn_relu(scaled(256, width_divisor));
    for (int i = 0; i < 5; ++i)
        b.conv_bn_relu(scaled(512, width_divisor));
    b.conv_bn_relu(scaled(256, width_divisor));
    b.conv_bn_relu(scaled(128, width_divisor));
    b.conv(out_channels, 1);
    return b.finish();
}

NetworkSpec build_residual_cnn(int in_channels, int out_channels, int height, int width, int width_divisor,
                               int blocks)
{
    if (width_divisor < 1 || blocks < 1)
        throw InvalidArgument("residual CNN needs width divisor >= 1 and blocks >= 1");
    const int w = scaled(256, width_divisor);
    SpecBuilder b("residual", {in_channels, height, width});
    int trunk = b.conv_bn_relu(w);
    for (int k = 0; k < blocks; ++k) {
        b.conv_bn_relu(w);
        b.conv(w, 3);
        b.batch_norm();
        b.add(trunk);
        trunk = b.relu();
    }
    b.conv(out_channels, 1);
    return b.finish();
}

NetworkSpec build_dense_cnn(int in_channels, int out_channels, int height, int width, int growth, int layers)
{
    if (growth < 1 || layers < 1)
        throw InvalidArgument("dense CNN needs growth >= 1 and layers >= 1");
    SpecBuilder b("dense", {in_channels, height, width});
    int features = b.conv_bn_relu(growth);
    for (int k = 0; k < layers; ++k) {
        b.conv_bn_relu(growth);
        features = b.concat(features);
    }
    b.conv(out_channels, 1);
    return b.finish();
}

std::int64_t count_params(const NetworkSpec& spec)
{
    std::int64_t total = 0;
    for (const LayerSpec& l : spec.layers) {
        if (l.kind == LayerKind::Conv)
            total += static_cast<std::int64_t>(l.kernel) * l.kernel * l.in.c * l.out.c + l.out.c;
        else if (l.kind == LayerKind::BatchNorm)
            total += 2 * static_cast<std::int64_t>(l.in.c);
    }
    return total;
}

Network::Network(NetworkSpec spec, std::uint64_t seed, std::string prefix) : spec_(std::move(spec))
{
    ad::Rng rng(seed);
    param_index_.assign(spec_.layers.size(), -1);
    bn_index_.assign(spec_.layers.size(), -1);
    // Reserve so Param addresses stay stable for the tape.
    params_.reserve(2 * spec_.layers.size());
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        const std::string base = prefix + "." + std::to_string(i) + ".";
        if (l.kind == LayerKind::Conv) {
            param_index_[i] = static_cast<int>(params_.size());
            const int fan_in = l.in.c * l.kernel * l.kernel;
            const double bound = std::sqrt(6.0 / fan_in);
            ad::Tensor w({l.out.c, l.in.c, l.kernel, l.kernel});
            for (double& v : w.values())
                v = rng.uniform(-bound, bound);
            params_.emplace_back(base + "weight", std::move(w));
            params_.emplace_back(base + "bias", ad::Tensor({1, l.out.c, 1, 1}));
        } else if (l.kind == LayerKind::BatchNorm) {
            param_index_[i] = static_cast<int>(params_.size());
            bn_index_[i] = static_cast<int>(bn_.size());
            params_.emplace_back(base + "gamma", ad::Tensor({1, l.in.c, 1, 1}, 1.0));
            params_.emplace_back(base + "beta", ad::Tensor({1, l.in.c, 1, 1}));
            bn_.emplace_back(l.in.c);
        }
    }
}

ad::Var Network::forward(ad::Tape& tape, ad::Var x, bool training)
{
    const ad::Shape xs = tape.value(x).shape();
    if (xs.c != spec_.input.c)
        throw ShapeMismatch(spec_.name + ": expected " + std::to_string(spec_.input.c) +
                            " input channels, got " + std::to_string(xs.c));
    const int div = 1 << spec_.pool_depth;
    if (xs.h % div != 0 || xs.w % div != 0)
        throw InputTooSmall(spec_.name + ": input " + std::to_string(xs.h) + "x" + std::to_string(xs.w) +
                            " is not divisible by " + std::to_string(div));

    std::vector<ad::Var> outs(spec_.layers.size());
    ad::Var cur = x;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        switch (l.kind) {
        case LayerKind::Conv: {
            auto& w = params_[static_cast<std::size_t>(param_index_[i])];
            auto& b = params_[static_cast<std::size_t>(param_index_[i]) + 1];
            cur = ad::conv2d(tape, cur, tape.param(w), tape.param(b), 1, ad::Padding::zero(l.kernel / 2));
            break;
        }
        case LayerKind::BatchNorm: {
            auto& g = params_[static_cast<std::size_t>(param_index_[i])];
            auto& be = params_[static_cast<std::size_t>(param_index_[i]) + 1];
            cur = ad::batch_norm_2d(tape, cur, tape.param(g), tape.param(be),
                                    bn_[static_cast<std::size_t>(bn_index_[i])], training);
            break;
        }
        case LayerKind::Relu:
            cur = ad::relu(tape, cur);
            break;
        case LayerKind::MaxPool:
            cur = ad::maxpool2(tape, cur);
            break;
        case LayerKind::Upsample:
            cur = ad::upsample_nearest2(tape, cur);
            break;
        case LayerKind::Concat:
            cur = ad::concat_channels(tape, cur, outs[static_cast<std::size_t>(l.source)]);
            break;
        case LayerKind::Add:
            cur = ad::add(tape, cur, outs[static_cast<std::size_t>(l.source)]);
            break;
        case LayerKind::Sigmoid:
            cur = ad::sigmoid(tape, cur);
            break;
        }
        outs[i] = cur;
    }
    return cur;
}

void Network::zero_and_freeze()
{
    for (ad::Param& p : params_) {
        p.value.fill(0.0);
        p.trainable = false;
        p.zero_grad();
    }
}

}  // namespace vmtu
