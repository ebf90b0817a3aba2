#pragma once

#include "vmtu/ad/tensor.hpp"

#include <cstdint>
#include <vector>

namespace vmtu {

/// Row-major 0/1 mask.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill) {}

    std::size_t size() const noexcept { return bits.size(); }
    std::size_t count() const noexcept;
    std::uint8_t& operator()(int r, int c) { return bits[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t operator()(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c]; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// 1 where value >= t, else 0 (the boundary is foreground).
BinaryMask threshold(const double* values, int height, int width, double t = 0.5);
/// Thresholds plane (n, 0) of a prediction tensor.
BinaryMask threshold(const ad::Tensor& pred, int n = 0, double t = 0.5);
BinaryMask mask_from_tensor(const ad::Tensor& target, int n = 0);

/// 100 * |pred AND gt| / (N1 N2), the literal foreground-intersection accuracy.
double paper_accuracy(const BinaryMask& pred, const BinaryMask& gt);

struct DiceResult {
    double value = 0.0;
    bool empty_pair = false;  // both masks empty; scored as 1
};

/// 2 |pred AND gt| / (|pred| + |gt|).
DiceResult dice(const BinaryMask& pred, const BinaryMask& gt);

/// 100 * fraction of pixels where pred == gt.
double pixel_accuracy(const BinaryMask& pred, const BinaryMask& gt);

/// Averages over K images.
double paper_accuracy(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts);
double dice(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts);
double pixel_accuracy(const std::vector<BinaryMask>& preds, const std::vector<BinaryMask>& gts);

struct EvalRecord {
    int epoch = 0;
    double loss = 0.0;
    std::vector<double> accuracy;        // per image, percent
    std::vector<double> pixel_accuracy;  // per image, percent
    std::vector<double> dice;            // per image
    int empty_pairs = 0;

    void add(const BinaryMask& pred, const BinaryMask& gt);

    double mean_accuracy() const;
    double std_accuracy() const;
    double mean_pixel_accuracy() const;
    double std_pixel_accuracy() const;
    double mean_dice() const;
    double std_dice() const;
};

double mean(const std::vector<double>& xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(const std::vector<double>& xs);

}  // namespace vmtu
