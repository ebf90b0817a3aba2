#include "vmtu/vmtunet.hpp"

#include "vmtu/error.hpp"

#include <cmath>

namespace vmtu {

namespace {

ad::Tensor he_uniform(ad::Shape shape, ad::Rng& rng)
{
    const double bound = std::sqrt(6.0 / (shape.c * shape.h * shape.w));
    ad::Tensor t(shape);
    for (double& v : t.values())
        v = rng.uniform(-bound, bound);
    return t;
}

constexpr int kInitKernel = 3;

}  // namespace

const char* to_string(FApprox kind)
{
    switch (kind) {
    case FApprox::Unet:
        return "unet";
    case FApprox::FlatCnn:
        return "flatcnn";
    case FApprox::Residual:
        return "residual";
    case FApprox::Dense:
        return "dense";
    }
    return "?";
}

FApprox fapprox_from_string(const std::string& name)
{
    if (name == "unet")
        return FApprox::Unet;
    if (name == "flatcnn")
        return FApprox::FlatCnn;
    if (name == "residual")
        return FApprox::Residual;
    if (name == "dense")
        return FApprox::Dense;
    throw InvalidArgument("unknown F approximator '" + name + "' (expected unet, flatcnn, residual or dense)");
}

void VMTUNetConfig::validate() const
{
    if (blocks < 1)
        throw InvalidArgument("VM_TUNet needs at least one block (M >= 1), got " + std::to_string(blocks));
    if (!(tau > 0.0) || !(eps1 > 0.0) || !(eps2 > 0.0) || !(h > 0.0))
        throw InvalidArgument("tau, eps1, eps2 and h must be positive");
    if (in_channels != 1 && in_channels != 3)
        throw InvalidArgument("input images must have 1 or 3 channels");
    if (height < 3 || width < 3)
        throw InputTooSmall("VM_TUNet input must be at least 3x3");
    if (width_divisor < 1 || dense_growth < 1)
        throw InvalidArgument("width divisor and dense growth must be >= 1");
}

nlohmann::json VMTUNetConfig::to_json() const
{
    return {{"channels", channels},
            {"in_channels", in_channels},
            {"height", height},
            {"width", width},
            {"blocks", blocks},
            {"tau", tau},
            {"eps1", eps1},
            {"eps2", eps2},
            {"h", h},
            {"scheme", vmtu::to_string(scheme)},
            {"bc", vmtu::to_string(bc)},
            {"fnet", vmtu::to_string(fnet)},
            {"width_divisor", width_divisor},
            {"dense_growth", dense_growth},
            {"freeze_tfpm_center", freeze_tfpm_center},
            {"seed", seed}};
}

VMTUNetConfig VMTUNetConfig::from_json(const nlohmann::json& j)
{
    VMTUNetConfig c;
    try {
        c.channels = j.value("channels", c.channels);
        c.in_channels = j.value("in_channels", c.in_channels);
        c.height = j.value("height", c.height);
        c.width = j.value("width", c.width);
        c.blocks = j.value("blocks", c.blocks);
        c.tau = j.value("tau", c.tau);
        c.eps1 = j.value("eps1", c.eps1);
        c.eps2 = j.value("eps2", c.eps2);
        c.h = j.value("h", c.h);
        if (j.contains("scheme"))
            c.scheme = scheme_from_string(j.at("scheme").get<std::string>());
        if (j.contains("bc"))
            c.bc = boundary_from_string(j.at("bc").get<std::string>());
        if (j.contains("fnet"))
            c.fnet = fapprox_from_string(j.at("fnet").get<std::string>());
        c.width_divisor = j.value("width_divisor", c.width_divisor);
        c.dense_growth = j.value("dense_growth", c.dense_growth);
        c.freeze_tfpm_center = j.value("freeze_tfpm_center", c.freeze_tfpm_center);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad model config: ") + e.what());
    }
    return c;
}

NetworkSpec build_fnet_spec(const VMTUNetConfig& cfg)
{
    switch (cfg.fnet) {
    case FApprox::Unet:
        return build_unet(cfg.channels, cfg.in_channels, 1, cfg.height, cfg.width);
    case FApprox::FlatCnn:
        return build_flatcnn(cfg.in_channels, 1, cfg.height, cfg.width, cfg.width_divisor);
    case FApprox::Residual:
        return build_residual_cnn(cfg.in_channels, 1, cfg.height, cfg.width, cfg.width_divisor);
    case FApprox::Dense:
        return build_dense_cnn(cfg.in_channels, 1, cfg.height, cfg.width, cfg.dense_growth);
    }
    throw InvalidArgument("unknown F approximator");
}

VMTUNetModel::VMTUNetModel(const VMTUNetConfig& cfg) : cfg_(cfg)
{
    cfg_.validate();
    ad::Rng rng(cfg_.seed);
    w0_ = ad::Param("init.weight", he_uniform({1, cfg_.in_channels, kInitKernel, kInitKernel}, rng));
    b0_ = ad::Param("init.bias", ad::Tensor({1, 1, 1, 1}));
    fnet_ = Network(build_fnet_spec(cfg_), cfg_.seed + 1, "fnet");
    ad::Rng rng_final(cfg_.seed + 2);
    wf_ = ad::Param("final.weight", he_uniform({1, 1, 1, 1}, rng_final));
    bf_ = ad::Param("final.bias", ad::Tensor({1, 1, 1, 1}));
}

ad::Var VMTUNetModel::forward(ad::Tape& tape, ad::Var f, bool training)
{
    const ad::Shape fs = tape.value(f).shape();
    if (fs.c != cfg_.in_channels)
        throw ShapeMismatch("VM_TUNet expects " + std::to_string(cfg_.in_channels) + " input channels, got " +
                            std::to_string(fs.c));
    if (fs.h < 3 || fs.w < 3)
        throw InputTooSmall("VM_TUNet input must be at least 3x3");

    const ad::PadMode mode = ad::pad_mode_for(cfg_.bc);
    ad::Var u = ad::sigmoid(tape, ad::conv2d(tape, f, tape.param(w0_), tape.param(b0_), 1,
                                             ad::Padding{mode, kInitKernel / 2}));
    ++fnet_calls_;
    const ad::Var g = ad::sigmoid(tape, fnet_.forward(tape, f, training));

    for (int n = 0; n < cfg_.blocks; ++n) {
        const ad::Var lap = cfg_.scheme == Scheme::Tfpm
                                ? ad::tfpm_laplacian_node(tape, u, cfg_.eps1, cfg_.eps2, cfg_.h, cfg_.bc,
                                                          cfg_.freeze_tfpm_center)
                                : ad::fdm_laplacian_node(tape, u, cfg_.h, cfg_.bc);
        const ad::Var v = ad::ch_potential_node(tape, u, lap, cfg_.eps1, cfg_.eps2);
        const ad::Var lv = ad::fdm_laplacian_node(tape, v, cfg_.h, cfg_.bc);
        u = ad::ch_update_node(tape, u, lv, g, cfg_.tau);
        for (double x : tape.value(u).values())
            if (!std::isfinite(x) || std::abs(x) > kDivergenceBound)
                throw Diverged("VM_TUNet block " + std::to_string(n + 1) + " left the bounded regime", n + 1);
    }
    return ad::sigmoid(tape, ad::conv2d(tape, u, tape.param(wf_), tape.param(bf_), 1, ad::Padding::zero(0)));
}

ad::Tensor VMTUNetModel::predict(const ad::Tensor& f)
{
    ad::Tape tape;
    const ad::Var out = forward(tape, tape.constant(f), false);
    return tape.value(out);
}

std::vector<ad::Param*> VMTUNetModel::parameters()
{
    std::vector<ad::Param*> out{&w0_, &b0_};
    for (ad::Param& p : fnet_.params())
        out.push_back(&p);
    out.push_back(&wf_);
    out.push_back(&bf_);
    return out;
}

std::int64_t VMTUNetModel::parameter_count() const
{
    return static_cast<std::int64_t>(w0_.value.size() + b0_.value.size() + wf_.value.size() +
                                     bf_.value.size()) +
           count_params(fnet_.spec());
}

ad::Checkpoint VMTUNetModel::to_checkpoint() const
{
    ad::Checkpoint ckpt;
    ckpt.config = cfg_.to_json();
    ckpt.tensors.emplace_back(w0_.name, w0_.value);
    ckpt.tensors.emplace_back(b0_.name, b0_.value);
    for (const ad::Param& p : fnet_.params())
        ckpt.tensors.emplace_back(p.name, p.value);
    for (std::size_t i = 0; i < fnet_.bn_states().size(); ++i) {
        const ad::BatchNormState& s = fnet_.bn_states()[i];
        ckpt.tensors.emplace_back("fnet.bn" + std::to_string(i) + ".running_mean", s.running_mean);
        ckpt.tensors.emplace_back("fnet.bn" + std::to_string(i) + ".running_var", s.running_var);
    }
    ckpt.tensors.emplace_back(wf_.name, wf_.value);
    ckpt.tensors.emplace_back(bf_.name, bf_.value);
    return ckpt;
}

void VMTUNetModel::load_checkpoint(const ad::Checkpoint& ckpt)
{
    auto take = [&](const std::string& name, ad::Tensor& dst) {
        const ad::Tensor* t = ckpt.find(name);
        if (t == nullptr)
            throw DecodeError("checkpoint is missing tensor " + name);
        if (t->shape() != dst.shape())
            throw ShapeMismatch("checkpoint tensor " + name + " has shape " + t->shape().str() + ", model expects " +
                                dst.shape().str());
        dst = *t;
    };
    for (ad::Param* p : parameters())
        take(p->name, p->value);
    for (std::size_t i = 0; i < fnet_.bn_states().size(); ++i) {
        ad::BatchNormState& s = fnet_.bn_states()[i];
        take("fnet.bn" + std::to_string(i) + ".running_mean", s.running_mean);
        take("fnet.bn" + std::to_string(i) + ".running_var", s.running_var);
    }
}

void VMTUNetModel::save(const std::filesystem::path& path) const { ad::write_checkpoint(path, to_checkpoint()); }

std::unique_ptr<VMTUNetModel> VMTUNetModel::load(const std::filesystem::path& path)
{
    const ad::Checkpoint ckpt = ad::read_checkpoint(path);
    auto model = std::make_unique<VMTUNetModel>(VMTUNetConfig::from_json(ckpt.config));
    model->load_checkpoint(ckpt);
    return model;
}

ad::Tensor vmtunet_forward(VMTUNetModel& model, const ImageTensor& f)
{
    const auto v = f.values();
    const ad::Tensor x({1, f.channels(), f.height(), f.width()}, std::vector<double>(v.begin(), v.end()));
    return model.predict(x);
}

}  // namespace vmtu
