#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace vmtu {

enum class BoundaryCondition {
    NeumannZeroFlux,  // realized by reflect-with-edge-repeat padding
    Periodic,         // realized by wrap padding
};

const char* to_string(BoundaryCondition bc);
BoundaryCondition boundary_from_string(const std::string_view name);

/// A height x width grid of doubles carrying its boundary condition.
/// Row-major; height and width are at least 3.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int height, int width, BoundaryCondition bc = BoundaryCondition::NeumannZeroFlux,
                double fill = 0.0);
    ScalarField(int height, int width, std::vector<double> values,
                BoundaryCondition bc = BoundaryCondition::NeumannZeroFlux);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }
    BoundaryCondition bc() const noexcept { return bc_; }
    void set_bc(BoundaryCondition bc) noexcept { bc_ = bc; }

    double& operator()(int row, int col) { return values_[index(row, col)]; }
    double operator()(int row, int col) const { return values_[index(row, col)]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    bool all_finite() const noexcept;
    double min() const;
    double max() const;
    double mean() const;

    bool same_shape(const ScalarField& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    BoundaryCondition bc_ = BoundaryCondition::NeumannZeroFlux;
    std::vector<double> values_;
};

/// H x W x D image with values in [0,1], stored channel-planar.
class ImageTensor {
public:
    ImageTensor() = default;
    ImageTensor(int height, int width, int channels, double fill = 0.0);
    ImageTensor(int height, int width, int channels, std::vector<double> values);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }

    double& at(int channel, int row, int col) { return values_[offset(channel, row, col)]; }
    double at(int channel, int row, int col) const { return values_[offset(channel, row, col)]; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> plane(int channel) const noexcept {
        return std::span<const double>(values_).subspan(channel * plane_size(), plane_size());
    }

    /// Rec. 601 luminance for D=3; a copy for D=1.
    ImageTensor luminance() const;

    /// Single-channel image as a field (D must be 1).
    ScalarField to_field(BoundaryCondition bc = BoundaryCondition::NeumannZeroFlux) const;

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t offset(int channel, int row, int col) const noexcept {
        return static_cast<std::size_t>(channel) * plane_size() +
               static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }
    void validate() const;

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> values_;
};

/// The 5-point central-difference Laplacian (1/h^2)[[0,1,0],[1,-4,1],[0,1,0]].
struct LaplacianKernel {
    std::array<double, 9> taps{};
    double h = 1.0;

    static LaplacianKernel five_point(double h);
};

namespace detail {
int reflect_index(int i, int n) noexcept;
int wrap_index(int i, int n) noexcept;
/// Pads a rows x cols row-major buffer by `width` cells on each side.
std::vector<double> pad_values(std::span<const double> values, int rows, int cols, int width,
                               BoundaryCondition bc);
}  // namespace detail

ScalarField pad(const ScalarField& field, int width);
/// Strips `width` ghost cells from every side.
ScalarField unpad(const ScalarField& padded, int width);

inline double double_well(double u) noexcept { return u * u * (u - 1.0) * (u - 1.0); }
inline double double_well_prime(double u) noexcept { return 4.0 * u * u * u - 6.0 * u * u + 2.0 * u; }
inline double double_well_second(double u) noexcept { return 12.0 * u * u - 12.0 * u + 2.0; }

ScalarField laplacian_fdm(const ScalarField& field, double h);

/// Discrete Ginzburg-Landau energy sum[(eps1/2)|grad u|^2 + W(u)/eps2] h^2 with
/// forward differences under the field's boundary condition.
double gl_energy(const ScalarField& u, double eps1, double eps2, double h);

/// Discrete L2 norm squared: h^2 * sum(u^2).
double l2_norm_sq(const ScalarField& u, double h);

}  // namespace vmtu
