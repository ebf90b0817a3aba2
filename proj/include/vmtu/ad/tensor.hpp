#pragma once

#include "vmtu/field.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vmtu::ad {

/// NCHW shape. Weight tensors reuse it as (C_out, C_in, k, k).
struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const noexcept
    {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
               static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    std::size_t plane() const noexcept
    {
        return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    }
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    double at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }

    double* plane(int n, int c) noexcept { return data_.data() + plane_offset(n, c); }
    const double* plane(int n, int c) const noexcept { return data_.data() + plane_offset(n, c); }

    void fill(double value);
    bool all_finite() const noexcept;
    double sum() const noexcept;

    /// (1,1,H,W) view of a field.
    static Tensor from_field(const ScalarField& field);
    /// Copies plane (n, c) out as a field.
    ScalarField to_field(int n, int c, BoundaryCondition bc) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t plane_offset(int n, int c) const noexcept
    {
        return (static_cast<std::size_t>(n) * static_cast<std::size_t>(shape_.c) +
                static_cast<std::size_t>(c)) *
               shape_.plane();
    }
    std::size_t offset(int n, int c, int h, int w) const noexcept
    {
        return plane_offset(n, c) + static_cast<std::size_t>(h) * static_cast<std::size_t>(shape_.w) +
               static_cast<std::size_t>(w);
    }

    Shape shape_;
    std::vector<double> data_;
};

/// Trainable tensor with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Param() = default;
    Param(std::string name, Tensor value);

    void zero_grad();
};

/// Seeded generator; uniform draws use the top 53 bits so streams are portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double mean, double stddev);
    std::uint64_t next() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace vmtu::ad
