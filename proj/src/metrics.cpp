#include "vmtu/metrics.hpp"

#include "vmtu/error.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace vmtu {

namespace {

void check_pair(const BinaryMask& a, const BinaryMask& b)
{
    if (a.height != b.height || a.width != b.width)
        throw ShapeMismatch("mask shapes differ: " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                            " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
}

void check_lists(const std::vector<BinaryMask>& a, const std::vector<BinaryMask>& b)
{
    if (a.size() != b.size())
        throw ShapeMismatch("prediction and ground-truth lists differ in length");
    if (a.empty())
        throw InvalidArgument("metrics need at least one image");
}

std::size_t intersection(const BinaryMask& a, const BinaryMask& b)
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        n += (a.bits[i] != 0 && b.bits[i] != 0) ? 1 : 0;
    return n;
}

template <typename F>
double average(const std::vector<BinaryMask>& a, const std::vector<BinaryMask>& b, F f)
{
    check_lists(a, b);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        acc += f(a[k], b[k]);
    return acc / static_cast<double>(a.size());
}

}  // namespace

std::size_t BinaryMask::count() const noexcept
{
    std::size_t n = 0;
    for (auto b : bits)
        n += b != 0 ? 1 : 0;
    return n;
}

BinaryMask threshold(const double* values, int height, int width, double t)
{
    BinaryMask m(height, width);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        m.bits[i] = values[i] >= t ? 1 : 0;
    return m;
}

BinaryMask threshold(const ad::Tensor& pred, int n, double t)
{
    return threshold(pred.plane(n, 0), pred.shape().h, pred.shape().w, t);
}

BinaryMask mask_from_tensor(const ad::Tensor& target, int n) { return threshold(target, n, 0.5); }

double paper_accuracy(const BinaryMask& pred, const BinaryMask& gt)
{
    check_pair(pred, gt);
    return 100.0 * static_cast<double>(intersection(pred, gt)) / static_cast<double>(pred.size());
}

DiceResult dice(const BinaryMask& pred, const BinaryMask& gt)
{
    check_pair(pred, gt);
    const std::size_t denom = pred.count() + gt.count();
    if (denom == 0)
        return {1.0, true};
    return {2.0 * static_cast<double>(intersection(pred, gt)) / static_cast<double>(denom), false};
}

double pixel_accuracy(const BinaryMask& pred, const BinaryMask& gt)
{
    check_pair(pred, gt);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < pred.bits.size(); ++i)
        agree += (pred.bits[i] != 0) == (gt.bits[i] != 0) ? 1 : 0;
    return 100.0 * static_cast<double>(agree) / static_cast<double>(pred.size());
}

double paper_accuracy(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts)
{
    return average(preds, gts, [](const BinaryMask& a, const BinaryMask& b) { return paper_accuracy(a, b); });
}

double dice(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts)
{
    return average(preds, gts, [](const BinaryMask& a, const BinaryMask& b) { return dice(a, b).value; });
}

double pixel_accuracy(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts)
{
    return average(preds, gts, [](const BinaryMask& a, const BinaryMask& b) { return pixel_accuracy(a, b); });
}

void EvalRecord::add(const BinaryMask& pred, const BinaryMask& gt)
{
    accuracy.push_back(paper_accuracy(pred, gt));
    pixel_accuracy.push_back(vmtu::pixel_accuracy(pred, gt));
    const DiceResult d = vmtu::dice(pred, gt);
    dice.push_back(d.value);
    empty_pairs += d.empty_pair ? 1 : 0;
}

double EvalRecord::mean_accuracy() const { return mean(accuracy); }
double EvalRecord::std_accuracy() const { return sample_std(accuracy); }
double EvalRecord::mean_pixel_accuracy() const { return mean(pixel_accuracy); }
double EvalRecord::std_pixel_accuracy() const { return sample_std(pixel_accuracy); }
double EvalRecord::mean_dice() const { return mean(dice); }
double EvalRecord::std_dice() const { return sample_std(dice); }

double mean(const std::vector<double>& xs)
{
    if (xs.empty())
        return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs)
{
    if (xs.size() < 2)
        return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace vmtu
