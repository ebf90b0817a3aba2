#include "vmtu/field.hpp"

#include "vmtu/error.hpp"
#include "vmtu/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vmtu {

const char* to_string(BoundaryCondition bc)
{
    return bc == BoundaryCondition::Periodic ? "periodic" : "neumann";
}

BoundaryCondition boundary_from_string(std::string_view name)
{
    if (name == "neumann")
        return BoundaryCondition::NeumannZeroFlux;
    if (name == "periodic")
        return BoundaryCondition::Periodic;
    throw InvalidArgument("unknown boundary condition '" + std::string(name) + "'");
}

ScalarField::ScalarField(int height, int width, BoundaryCondition bc, double fill)
    : ScalarField(height, width,
                  std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                          static_cast<std::size_t>(std::max(width, 0)),
                                      fill),
                  bc)
{
}

ScalarField::ScalarField(int height, int width, std::vector<double> values, BoundaryCondition bc)
    : height_(height), width_(width), bc_(bc), values_(std::move(values))
{
    if (height < 3 || width < 3)
        throw InvalidArgument("ScalarField needs at least 3x3 cells, got " +
                              std::to_string(height) + "x" + std::to_string(width));
    if (values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
        throw ShapeMismatch("ScalarField value count does not match its shape");
}

bool ScalarField::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::mean() const
{
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(size());
}

ImageTensor::ImageTensor(int height, int width, int channels, double fill)
    : ImageTensor(height, width, channels,
                  std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                          static_cast<std::size_t>(std::max(width, 0)) *
                                          static_cast<std::size_t>(std::max(channels, 0)),
                                      fill))
{
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values))
{
    validate();
}

void ImageTensor::validate() const
{
    if (height_ < 1 || width_ < 1)
        throw InvalidArgument("image must be non-empty");
    if (channels_ != 1 && channels_ != 3)
        throw InvalidArgument("image must have 1 or 3 channels, got " + std::to_string(channels_));
    if (values_.size() != plane_size() * static_cast<std::size_t>(channels_))
        throw ShapeMismatch("image value count does not match its shape");
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidArgument("image values must lie in [0,1]");
}

ImageTensor ImageTensor::luminance() const
{
    if (channels_ == 1)
        return *this;
    std::vector<double> out(plane_size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double y = 0.299 * values_[i] + 0.587 * values_[plane_size() + i] +
                         0.114 * values_[2 * plane_size() + i];
        out[i] = std::clamp(y, 0.0, 1.0);
    }
    return ImageTensor(height_, width_, 1, std::move(out));
}

ScalarField ImageTensor::to_field(BoundaryCondition bc) const
{
    if (channels_ != 1)
        throw InvalidArgument("to_field needs a single-channel image");
    return ScalarField(height_, width_, values_, bc);
}

LaplacianKernel LaplacianKernel::five_point(double h)
{
    const double s = 1.0 / (h * h);
    return LaplacianKernel{{0.0, s, 0.0, s, -4.0 * s, s, 0.0, s, 0.0}, h};
}

namespace detail {

int reflect_index(int i, int n) noexcept
{
    // half-sample symmetric: ... u1 u0 | u0 u1 ... u_{n-1} | u_{n-1} u_{n-2} ...
    while (i < 0 || i >= n) {
        if (i < 0)
            i = -i - 1;
        if (i >= n)
            i = 2 * n - i - 1;
    }
    return i;
}

int wrap_index(int i, int n) noexcept
{
    const int m = i % n;
    return m < 0 ? m + n : m;
}

std::vector<double> pad_values(std::span<const double> values, int rows, int cols, int width,
                               BoundaryCondition bc)
{
    const int prow = rows + 2 * width;
    const int pcol = cols + 2 * width;
    std::vector<double> out(static_cast<std::size_t>(prow) * static_cast<std::size_t>(pcol));
    const bool periodic = bc == BoundaryCondition::Periodic;
    for (int r = 0; r < prow; ++r) {
        const int sr = periodic ? wrap_index(r - width, rows) : reflect_index(r - width, rows);
        const double* src = values.data() + static_cast<std::size_t>(sr) * cols;
        double* dst = out.data() + static_cast<std::size_t>(r) * pcol;
        for (int c = 0; c < width; ++c) {
            dst[c] = src[periodic ? wrap_index(c - width, cols) : reflect_index(c - width, cols)];
            const int right = cols + width + c;
            dst[right] = src[periodic ? wrap_index(right - width, cols)
                                      : reflect_index(right - width, cols)];
        }
        std::copy(src, src + cols, dst + width);
    }
    return out;
}

}  // namespace detail

ScalarField pad(const ScalarField& field, int width)
{
    if (width < 1)
        throw InvalidArgument("pad width must be >= 1");
    return ScalarField(field.height() + 2 * width, field.width() + 2 * width,
                       detail::pad_values(field.values(), field.height(), field.width(), width,
                                          field.bc()),
                       field.bc());
}

ScalarField unpad(const ScalarField& padded, int width)
{
    ScalarField out(padded.height() - 2 * width, padded.width() - 2 * width, padded.bc());
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            out(r, c) = padded(r + width, c + width);
    return out;
}

ScalarField laplacian_fdm(const ScalarField& field, double h)
{
    if (!(h > 0.0))
        throw InvalidArgument("grid spacing h must be positive");
    const std::vector<double> padded =
        detail::pad_values(field.values(), field.height(), field.width(), 1, field.bc());
    ScalarField out(field.height(), field.width(), field.bc());
    const double inv_h2 = 1.0 / (h * h);
    simd::kernels().stencil5(padded.data(), static_cast<std::size_t>(field.width() + 2), out.data(),
                             static_cast<std::size_t>(field.width()), field.height(),
                             field.width(), inv_h2, -4.0 * inv_h2);
    return out;
}

double gl_energy(const ScalarField& u, double eps1, double eps2, double h)
{
    if (!(eps1 > 0.0) || !(eps2 > 0.0) || !(h > 0.0))
        throw InvalidArgument("gl_energy needs eps1, eps2, h > 0");
    const bool periodic = u.bc() == BoundaryCondition::Periodic;
    const int rows = u.height();
    const int cols = u.width();
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double here = u(r, c);
            const int rn = periodic ? detail::wrap_index(r + 1, rows) : std::min(r + 1, rows - 1);
            const int cn = periodic ? detail::wrap_index(c + 1, cols) : std::min(c + 1, cols - 1);
            const double dx = (u(r, cn) - here) / h;
            const double dy = (u(rn, c) - here) / h;
            total += 0.5 * eps1 * (dx * dx + dy * dy) + double_well(here) / eps2;
        }
    }
    return total * h * h;
}

double l2_norm_sq(const ScalarField& u, double h)
{
    const auto v = u.values();
    return h * h * simd::kernels().dot(v.size(), v.data(), v.data());
}

}  // namespace vmtu
