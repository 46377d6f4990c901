#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bh3d/core/image.hpp"
#include "bh3d/core/wavelength_grid.hpp"

// On-disk format shared by cubes, stacks, depth maps and plain images: a flat
// little-endian float32 payload `<stem>.bin`, a JSON sidecar `<stem>.json`
// and, where a validity channel exists, one byte per pixel in `<stem>.mask`.

namespace bh3d::io {

namespace fs = std::filesystem;

void write_cube(const fs::path& stem, const SpectralCube& cube);
SpectralCube read_cube(const fs::path& stem);

void write_stack(const fs::path& stem, const ScanStack& stack);
ScanStack read_stack(const fs::path& stem);

void write_depth(const fs::path& stem, const DepthMap& depth);
DepthMap read_depth(const fs::path& stem);

void write_image(const fs::path& stem, const Image& image, const std::string& kind = "image");
Image read_image(const fs::path& stem);

void write_mask(const fs::path& path, const Mask& mask);
Mask read_mask(const fs::path& path, std::size_t expected);

/// `wavelength_nm,reflectance` CSV for one spectrum.
void write_spectrum_csv(const fs::path& path, const WavelengthGrid& grid, std::span<const double> values);

/// Grayscale 8-bit PNG, linearly mapping [lo, hi] to [0, 255].
void write_png_gray(const fs::path& path, const Image& image, double lo, double hi);
/// 8-bit RGB PNG from three channels, each mapped from [lo, hi].
void write_png_rgb(const fs::path& path, const Image& r, const Image& g, const Image& b, double lo, double hi);

// Low-level payload helpers.
void write_f32(const fs::path& path, std::span<const double> values);
std::vector<double> read_f32(const fs::path& path, std::size_t expected);

/// Strips a trailing ".json" or ".bin" so either a stem or a sidecar path may be passed.
fs::path normalize_stem(const fs::path& p);

}  // namespace bh3d::io
