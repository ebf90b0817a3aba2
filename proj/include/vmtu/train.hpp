#pragma once

#include "vmtu/ad/losses.hpp"
#include "vmtu/ad/optim.hpp"
#include "vmtu/data_io.hpp"
#include "vmtu/metrics.hpp"
#include "vmtu/vmtunet.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace vmtu {

struct HistoryRow {
    int epoch = 0;
    double loss = 0.0;            // mean training loss over the epoch (epoch 0: before any update)
    double paper_accuracy = 0.0;  // on the evaluation set, percent
    double pixel_accuracy = 0.0;  // percent
    double dice = 0.0;

    friend bool operator==(const HistoryRow&, const HistoryRow&) = default;
};

struct TrainConfig {
    int epochs = 300;
    double lr = 1e-3;
    ad::LossKind loss = ad::LossKind::Bce;
    int batch_size = 4;
    int eval_every = 10;
    std::uint64_t seed = 7;  // shuffle stream
    std::function<void(const HistoryRow&)> on_eval;

    void validate() const;
    nlohmann::json to_json() const;
};

struct TrainResult {
    std::vector<HistoryRow> history;
    double seconds = 0.0;
};

ad::Tensor image_tensor(const ImageTensor& image);
ad::Tensor mask_tensor(const BinaryMask& mask);

/// Metrics and mean loss of the model in eval mode.
EvalRecord evaluate(VMTUNetModel& model, const Dataset& data, ad::LossKind loss = ad::LossKind::Bce);
/// Eval-mode predictions thresholded at 0.5.
std::vector<BinaryMask> predict_masks(VMTUNetModel& model, const Dataset& data);

/// Adam over shuffled mini-batches with per-sample forward/backward and in-order
/// gradient accumulation. Metrics are taken on `eval` (or `train` when null) at
/// epoch 0, every eval_every epochs and at the last epoch.
/// Throws Diverged with the epoch and sample index on a non-finite loss.
TrainResult train(VMTUNetModel& model, const Dataset& train, const Dataset* eval, const TrainConfig& cfg);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history);

enum class SweepAxis { M, Tau, Eps1, Eps2 };
const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepCell {
    double value = 0.0;
    std::vector<HistoryRow> history;
    bool diverged = false;
    std::string error;
    long diverged_step = 0;

    double final_dice() const { return history.empty() ? 0.0 : history.back().dice; }
};

/// One fresh model per value, everything else held fixed. Diverged cells are
/// recorded and the sweep continues.
std::vector<SweepCell> sweep(SweepAxis axis, const std::vector<double>& values, const VMTUNetConfig& base,
                             const TrainConfig& train_cfg, const Dataset& train_set, const Dataset* eval_set);

/// Header: <axis>,epoch,loss,paper_accuracy,pixel_accuracy,dice. A diverged cell
/// contributes its rows up to divergence and one row of nan metrics.
void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepCell>& cells);

}  // namespace vmtu
