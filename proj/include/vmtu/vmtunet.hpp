#pragma once

#include "vmtu/ad/checkpoint.hpp"
#include "vmtu/discretization.hpp"
#include "vmtu/networks.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vmtu {

/// Family of the force approximator F.
enum class FApprox { Unet, FlatCnn, Residual, Dense };

const char* to_string(FApprox kind);
FApprox fapprox_from_string(const std::string& name);

struct VMTUNetConfig {
    std::vector<int> channels{8, 8, 16};
    int in_channels = 1;
    int height = 64;
    int width = 64;
    int blocks = 10;  // M
    double tau = 0.5;
    double eps1 = 1.0;
    double eps2 = 1.0;
    double h = 6.0;  // h = 1 is unstable at tau = 0.5
    Scheme scheme = Scheme::Tfpm;
    BoundaryCondition bc = BoundaryCondition::Periodic;
    FApprox fnet = FApprox::Unet;
    int width_divisor = 32;  // FlatCNN / residual stand-ins at desk scale
    int dense_growth = 8;
    bool freeze_tfpm_center = false;
    std::uint64_t seed = 7;

    /// Throws InvalidArgument (M < 1, non-positive coefficients) or InputTooSmall.
    void validate() const;
    nlohmann::json to_json() const;
    static VMTUNetConfig from_json(const nlohmann::json& j);
};

NetworkSpec build_fnet_spec(const VMTUNetConfig& cfg);

/// Init conv, shared force network, M unrolled solver blocks and final 1x1 conv.
class VMTUNetModel {
public:
    explicit VMTUNetModel(const VMTUNetConfig& cfg);

    VMTUNetModel(const VMTUNetModel&) = delete;
    VMTUNetModel& operator=(const VMTUNetModel&) = delete;

    /// f: (N, D, H, W) on the tape. Returns P(f) with shape (N, 1, H, W).
    /// Throws Diverged when a block produces a non-finite or unbounded state.
    ad::Var forward(ad::Tape& tape, ad::Var f, bool training);

    /// Convenience forward without gradients, eval-mode BN.
    ad::Tensor predict(const ad::Tensor& f);

    const VMTUNetConfig& config() const noexcept { return cfg_; }
    Network& fnet() noexcept { return fnet_; }
    ad::Param& init_weight() noexcept { return w0_; }
    ad::Param& init_bias() noexcept { return b0_; }
    ad::Param& final_weight() noexcept { return wf_; }
    ad::Param& final_bias() noexcept { return bf_; }

    /// Every parameter in a fixed order: init conv, F network, final conv.
    std::vector<ad::Param*> parameters();
    std::int64_t parameter_count() const;

    /// Number of F-network evaluations since construction.
    long fnet_calls() const noexcept { return fnet_calls_; }

    ad::Checkpoint to_checkpoint() const;
    void load_checkpoint(const ad::Checkpoint& ckpt);
    void save(const std::filesystem::path& path) const;
    /// Builds the model described by the checkpoint's config and loads its tensors.
    static std::unique_ptr<VMTUNetModel> load(const std::filesystem::path& path);

private:
    VMTUNetConfig cfg_;
    ad::Param w0_;
    ad::Param b0_;
    Network fnet_;
    ad::Param wf_;
    ad::Param bf_;
    long fnet_calls_ = 0;
};

/// Single-image forward: f is converted to a (1, D, H, W) tensor.
ad::Tensor vmtunet_forward(VMTUNetModel& model, const ImageTensor& f);

}  // namespace vmtu
