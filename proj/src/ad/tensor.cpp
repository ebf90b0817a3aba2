#include "vmtu/ad/tensor.hpp"

#include "vmtu/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace vmtu::ad {

std::string Shape::str() const
{
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values))
{
    if (data_.size() != shape_.size())
        throw ShapeMismatch("tensor value count " + std::to_string(data_.size()) +
                            " does not match shape " + shape_.str());
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Tensor Tensor::from_field(const ScalarField& field)
{
    const auto v = field.values();
    return Tensor({1, 1, field.height(), field.width()}, std::vector<double>(v.begin(), v.end()));
}

ScalarField Tensor::to_field(int n, int c, BoundaryCondition bc) const
{
    const double* p = plane(n, c);
    return ScalarField(shape_.h, shape_.w, std::vector<double>(p, p + shape_.plane()), bc);
}

Param::Param(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape())
{
}

void Param::zero_grad()
{
    if (grad.shape() != value.shape())
        grad = Tensor(value.shape());
    else
        grad.fill(0.0);
}

double Rng::normal(double mean, double stddev)
{
    // Marsaglia polar method on the portable uniform stream.
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double x, y, s;
    do {
        x = uniform(-1.0, 1.0);
        y = uniform(-1.0, 1.0);
        s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * m;
    has_spare_ = true;
    return mean + stddev * x * m;
}

}  // namespace vmtu::ad
