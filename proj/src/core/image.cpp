#include "bh3d/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bh3d/core/error.hpp"

namespace bh3d {

Image::Image(int w, int h, double fill) : width(w), height(h) {
    BH3D_REQUIRE(w >= 0 && h >= 0, ContractError, "image dimensions must be non-negative");
    data.assign(pixel_count(), fill);
}

bool Image::sample_bilinear(double x, double y, double& out) const {
    if (!(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1)) return false;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    const double bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    out = top + fy * (bottom - top);
    return true;
}

SpectralCube::SpectralCube(int width, int height, WavelengthGrid grid, double fill)
    : width_(width), height_(height), grid_(std::move(grid)) {
    BH3D_REQUIRE(width > 0 && height > 0, ContractError, "cube dimensions must be positive");
    data_.assign(pixel_count() * bands(), fill);
    valid_.assign(pixel_count(), 1);
}

SpectralCube::SpectralCube(int width, int height, WavelengthGrid grid, std::vector<double> data)
    : width_(width), height_(height), grid_(std::move(grid)), data_(std::move(data)) {
    BH3D_REQUIRE(width > 0 && height > 0, ContractError, "cube dimensions must be positive");
    BH3D_REQUIRE(data_.size() == pixel_count() * bands(), ContractError,
                 "cube data length " + std::to_string(data_.size()) + " != width*height*bands");
    valid_.assign(pixel_count(), 1);
}

Image SpectralCube::band_image(std::size_t b) const {
    Image img(width_, height_);
    for (std::size_t p = 0; p < pixel_count(); ++p) img.data[p] = data_[p * bands() + b];
    return img;
}

void SpectralCube::set_band_image(std::size_t b, const Image& img) {
    BH3D_REQUIRE(img.width == width_ && img.height == height_, ContractError, "band image shape mismatch");
    for (std::size_t p = 0; p < pixel_count(); ++p) data_[p * bands() + b] = img.data[p];
}

void SpectralCube::clamp_nonnegative() {
    for (double& v : data_) {
        if (!std::isfinite(v)) throw DomainError("non-finite reflectance value in cube");
        if (v < 0.0) v = 0.0;
    }
}

ScanStack::ScanStack(int width, int height, std::vector<double> angles_deg, CameraTag tag)
    : width_(width), height_(height), angles_(std::move(angles_deg)), tag_(tag) {
    BH3D_REQUIRE(width > 0 && height > 0, ContractError, "stack dimensions must be positive");
    BH3D_REQUIRE(!angles_.empty(), ValidationError, "scan stack needs at least one angle");
    for (std::size_t i = 0; i < angles_.size(); ++i) {
        const double a = angles_[i];
        if (!std::isfinite(a) || a < -22.5 - 1e-9 || a > 22.5 + 1e-9) {
            throw ValidationError("galvo angle " + std::to_string(a) + " outside [-22.5, 22.5] deg");
        }
        if (i > 0 && !(a > angles_[i - 1])) throw ValidationError("galvo angles must be strictly increasing");
    }
    data_.assign(pixel_count() * angles_.size(), 0.0);
    valid_.assign(pixel_count(), 1);
}

std::vector<double> ScanStack::default_angles() {
    std::vector<double> a(181);
    for (int i = 0; i < 181; ++i) a[i] = -22.5 + 0.25 * i;
    return a;
}

bool ScanStack::same_shape(const ScanStack& other) const {
    return width_ == other.width_ && height_ == other.height_ && angles_ == other.angles_;
}

DepthMap::DepthMap(int w, int h) : width(w), height(h) {
    BH3D_REQUIRE(w > 0 && h > 0, ContractError, "depth map dimensions must be positive");
    depth.assign(pixel_count(), kInvalidDepth);
    valid.assign(pixel_count(), 0);
}

DepthMap DepthMap::constant(int w, int h, double z) {
    BH3D_REQUIRE(z > 0.0, DomainError, "depth must be positive");
    DepthMap d(w, h);
    d.depth.assign(d.pixel_count(), z);
    d.valid.assign(d.pixel_count(), 1);
    return d;
}

void DepthMap::set(int x, int y, double z) {
    const std::size_t i = index(x, y);
    if (z > 0.0 && std::isfinite(z)) {
        depth[i] = z;
        valid[i] = 1;
    } else {
        invalidate(i);
    }
}

void DepthMap::invalidate(std::size_t i) {
    depth[i] = kInvalidDepth;
    valid[i] = 0;
}

std::size_t DepthMap::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
}

}  // namespace bh3d
