#include "vmtu/train.hpp"

#include "vmtu/error.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

namespace vmtu {

namespace {

void ensure_parent(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
}

std::ofstream open_csv(const std::filesystem::path& path)
{
    ensure_parent(path);
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    os << std::setprecision(17);
    return os;
}

HistoryRow eval_row(VMTUNetModel& model, const Dataset& data, int epoch, double loss)
{
    std::vector<BinaryMask> preds = predict_masks(model, data);
    std::vector<BinaryMask> gts;
    gts.reserve(data.size());
    for (const Sample& s : data.samples)
        gts.push_back(s.mask);
    return {epoch, loss, paper_accuracy(preds, gts), pixel_accuracy(preds, gts), dice(preds, gts)};
}

}  // namespace

void TrainConfig::validate() const
{
    if (epochs < 0)
        throw InvalidArgument("epochs must be >= 0");
    if (!(lr >= 0.0))
        throw InvalidArgument("learning rate must be >= 0");
    if (batch_size < 1)
        throw InvalidArgument("batch size must be >= 1");
    if (eval_every < 1)
        throw InvalidArgument("eval interval must be >= 1");
}

nlohmann::json TrainConfig::to_json() const
{
    return {{"epochs", epochs},       {"lr", lr},         {"loss", ad::to_string(loss)},
            {"batch_size", batch_size}, {"eval_every", eval_every}, {"seed", seed}};
}

ad::Tensor image_tensor(const ImageTensor& image)
{
    const auto v = image.values();
    return ad::Tensor({1, image.channels(), image.height(), image.width()}, std::vector<double>(v.begin(), v.end()));
}

ad::Tensor mask_tensor(const BinaryMask& mask)
{
    ad::Tensor t({1, 1, mask.height, mask.width});
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        t[i] = mask.bits[i] ? 1.0 : 0.0;
    return t;
}

std::vector<BinaryMask> predict_masks(VMTUNetModel& model, const Dataset& data)
{
    std::vector<BinaryMask> out;
    out.reserve(data.size());
    for (const Sample& s : data.samples)
        out.push_back(threshold(model.predict(image_tensor(s.image))));
    return out;
}

EvalRecord evaluate(VMTUNetModel& model, const Dataset& data, ad::LossKind loss_kind)
{
    EvalRecord rec;
    double total = 0.0;
    for (const Sample& s : data.samples) {
        ad::Tape tape;
        const ad::Var p = model.forward(tape, tape.constant(image_tensor(s.image)), false);
        const ad::Var l = ad::loss(tape, loss_kind, p, tape.constant(mask_tensor(s.mask)));
        total += tape.value(l)[0];
        rec.add(threshold(tape.value(p)), s.mask);
    }
    rec.loss = data.empty() ? 0.0 : total / static_cast<double>(data.size());
    return rec;
}

TrainResult train(VMTUNetModel& model, const Dataset& train_set, const Dataset* eval_set, const TrainConfig& cfg)
{
    cfg.validate();
    if (train_set.empty())
        throw InvalidArgument("training set is empty");
    const Dataset& metrics_set = (eval_set != nullptr && !eval_set->empty()) ? *eval_set : train_set;
    const auto start = std::chrono::steady_clock::now();

    std::vector<ad::Tensor> images, targets;
    for (const Sample& s : train_set.samples) {
        images.push_back(image_tensor(s.image));
        targets.push_back(mask_tensor(s.mask));
    }

    TrainResult result;
    auto emit = [&](const HistoryRow& row) {
        result.history.push_back(row);
        if (cfg.on_eval)
            cfg.on_eval(row);
    };

    {
        double total = 0.0;
        for (std::size_t i = 0; i < images.size(); ++i) {
            ad::Tape tape;
            const ad::Var p = model.forward(tape, tape.constant(images[i]), false);
            total += tape.value(ad::loss(tape, cfg.loss, p, tape.constant(targets[i])))[0];
        }
        emit(eval_row(model, metrics_set, 0, total / static_cast<double>(images.size())));
    }

    const std::vector<ad::Param*> params = model.parameters();
    ad::AdamState adam;
    const ad::AdamConfig adam_cfg{cfg.lr, 0.9, 0.999, 1e-8};
    ad::Rng shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(images.size());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(shuffle_rng.uniform() * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }

        double epoch_loss = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
            const double inv = 1.0 / static_cast<double>(b1 - b0);
            for (ad::Param* p : params)
                p->zero_grad();
            for (std::size_t k = b0; k < b1; ++k) {
                const std::size_t idx = order[k];
                ad::Tape tape;
                double value = 0.0;
                try {
                    const ad::Var p = model.forward(tape, tape.constant(images[idx]), true);
                    const ad::Var l = ad::loss(tape, cfg.loss, p, tape.constant(targets[idx]));
                    value = tape.value(l)[0];
                    if (std::isfinite(value))
                        tape.backward(l, inv);
                } catch (const Diverged& e) {
                    throw Diverged("epoch " + std::to_string(epoch) + ", sample " + std::to_string(idx) + ": " +
                                       e.what(),
                                   epoch);
                }
                if (!std::isfinite(value))
                    throw Diverged("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                                       std::to_string(idx),
                                   epoch);
                epoch_loss += value;
            }
            ad::adam_step(params, adam, adam_cfg);
        }
        epoch_loss /= static_cast<double>(order.size());

        if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)
            emit(eval_row(model, metrics_set, epoch, epoch_loss));
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history)
{
    std::ofstream os = open_csv(path);
    os << "epoch,loss,paper_accuracy,pixel_accuracy,dice\n";
    for (const HistoryRow& r : history)
        os << r.epoch << ',' << r.loss << ',' << r.paper_accuracy << ',' << r.pixel_accuracy << ',' << r.dice << '\n';
    if (!os)
        throw IoError("failed writing " + path.string());
}

const char* to_string(SweepAxis axis)
{
    switch (axis) {
    case SweepAxis::M:
        return "M";
    case SweepAxis::Tau:
        return "tau";
    case SweepAxis::Eps1:
        return "eps1";
    case SweepAxis::Eps2:
        return "eps2";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& name)
{
    for (SweepAxis a : {SweepAxis::M, SweepAxis::Tau, SweepAxis::Eps1, SweepAxis::Eps2})
        if (name == to_string(a))
            return a;
    throw InvalidArgument("unknown sweep axis '" + name + "' (expected M, tau, eps1 or eps2)");
}

std::vector<SweepCell> sweep(SweepAxis axis, const std::vector<double>& values, const VMTUNetConfig& base,
                             const TrainConfig& train_cfg, const Dataset& train_set, const Dataset* eval_set)
{
    if (values.empty())
        throw InvalidArgument("sweep needs at least one value");
    std::vector<SweepCell> cells;
    for (double v : values) {
        VMTUNetConfig cfg = base;
        switch (axis) {
        case SweepAxis::M:
            if (v != std::floor(v))
                throw InvalidArgument("M values must be integers");
            cfg.blocks = static_cast<int>(v);
            break;
        case SweepAxis::Tau:
            cfg.tau = v;
            break;
        case SweepAxis::Eps1:
            cfg.eps1 = v;
            break;
        case SweepAxis::Eps2:
            cfg.eps2 = v;
            break;
        }
        SweepCell cell;
        cell.value = v;
        TrainConfig tc = train_cfg;
        tc.on_eval = [&cell, &train_cfg](const HistoryRow& row) {
            cell.history.push_back(row);
            if (train_cfg.on_eval)
                train_cfg.on_eval(row);
        };
        try {
            VMTUNetModel model(cfg);
            train(model, train_set, eval_set, tc);
        } catch (const Diverged& e) {
            cell.diverged = true;
            cell.error = e.what();
            cell.diverged_step = e.step();
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepCell>& cells)
{
    std::ofstream os = open_csv(path);
    os << to_string(axis) << ",epoch,loss,paper_accuracy,pixel_accuracy,dice\n";
    for (const SweepCell& c : cells) {
        for (const HistoryRow& r : c.history)
            os << c.value << ',' << r.epoch << ',' << r.loss << ',' << r.paper_accuracy << ',' << r.pixel_accuracy
               << ',' << r.dice << '\n';
        if (c.diverged)
            os << c.value << ',' << c.diverged_step << ",nan,nan,nan,nan\n";
    }
    if (!os)
        throw IoError("failed writing " + path.string());
}

}  // namespace vmtu
