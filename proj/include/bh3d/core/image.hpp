#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bh3d/core/wavelength_grid.hpp"

namespace bh3d {

/// Per-pixel boolean channel, one byte per pixel (1 = valid).
using Mask = std::vector<std::uint8_t>;

/// Single-channel row-major image, origin top-left.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x; }
    double& at(int x, int y) { return data[index(x, y)]; }
    double at(int x, int y) const { return data[index(x, y)]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    /// Bilinear sample at continuous pixel coordinates; false when any tap falls outside.
    bool sample_bilinear(double x, double y, double& out) const;
};

/**
 * @brief Per-pixel reflectance over a wavelength grid.
 *
 * Layout is row-major with the band index fastest: (y * width + x) * bands + b.
 * `valid` flags pixels that carry a meaningful spectrum.
 */
class SpectralCube {
public:
    SpectralCube() = default;
    SpectralCube(int width, int height, WavelengthGrid grid, double fill = 0.0);
    SpectralCube(int width, int height, WavelengthGrid grid, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    const WavelengthGrid& grid() const { return grid_; }
    std::size_t bands() const { return grid_.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
    std::size_t pixel_index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + x; }

    std::span<double> spectrum(std::size_t pixel) { return {data_.data() + pixel * bands(), bands()}; }
    std::span<const double> spectrum(std::size_t pixel) const { return {data_.data() + pixel * bands(), bands()}; }
    std::span<double> spectrum(int x, int y) { return spectrum(pixel_index(x, y)); }
    std::span<const double> spectrum(int x, int y) const { return spectrum(pixel_index(x, y)); }
    double& at(int x, int y, std::size_t b) { return data_[pixel_index(x, y) * bands() + b]; }
    double at(int x, int y, std::size_t b) const { return data_[pixel_index(x, y) * bands() + b]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    Mask& valid() { return valid_; }
    const Mask& valid() const { return valid_; }
    bool is_valid(std::size_t pixel) const { return valid_[pixel] != 0; }

    Image band_image(std::size_t b) const;
    void set_band_image(std::size_t b, const Image& img);

    /// Clamp negatives to zero; throws DomainError on non-finite entries.
    void clamp_nonnegative();

private:
    int width_ = 0;
    int height_ = 0;
    WavelengthGrid grid_;
    std::vector<double> data_;
    Mask valid_;
};

/// Per-pixel intensity over galvo angles. Layout (y * width + x) * angles + i.
class ScanStack {
public:
    ScanStack() = default;
    ScanStack(int width, int height, std::vector<double> angles_deg, CameraTag tag);

    /// -22.5 .. 22.5 deg at 0.25 deg (181 angles).
    static std::vector<double> default_angles();

    int width() const { return width_; }
    int height() const { return height_; }
    CameraTag tag() const { return tag_; }
    std::span<const double> angles() const { return angles_; }
    std::size_t angle_count() const { return angles_.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
    std::size_t pixel_index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + x; }

    std::span<double> samples(std::size_t pixel) { return {data_.data() + pixel * angle_count(), angle_count()}; }
    std::span<const double> samples(std::size_t pixel) const { return {data_.data() + pixel * angle_count(), angle_count()}; }
    std::span<double> samples(int x, int y) { return samples(pixel_index(x, y)); }
    std::span<const double> samples(int x, int y) const { return samples(pixel_index(x, y)); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    Mask& valid() { return valid_; }
    const Mask& valid() const { return valid_; }

    bool same_shape(const ScanStack& other) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> angles_;
    CameraTag tag_ = CameraTag::VNIR;
    std::vector<double> data_;
    Mask valid_;
};

/// Metric depth per pixel; invalid pixels hold kInvalidDepth and are ignored by all statistics.
struct DepthMap {
    static constexpr double kInvalidDepth = 0.0;

    int width = 0;
    int height = 0;
    std::vector<double> depth;
    Mask valid;

    DepthMap() = default;
    DepthMap(int w, int h);
    /// Constant-depth map, all valid.
    static DepthMap constant(int w, int h, double z);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x; }
    bool is_valid(std::size_t i) const { return valid[i] != 0; }
    double at(int x, int y) const { return depth[index(x, y)]; }
    void set(int x, int y, double z);
    void invalidate(std::size_t i);
    std::size_t valid_count() const;
};

}  // namespace bh3d
