#include "bh3d/core/wavelength_grid.hpp"

#include <algorithm>
#include <cmath>

#include "bh3d/core/error.hpp"

namespace bh3d {

std::string_view to_string(CameraTag tag) {
    switch (tag) {
        case CameraTag::VNIR: return "VNIR";
        case CameraTag::SWIR: return "SWIR";
        case CameraTag::FUSED: return "FUSED";
    }
    return "?";
}

CameraTag camera_tag_from_string(std::string_view name) {
    if (name == "VNIR") return CameraTag::VNIR;
    if (name == "SWIR") return CameraTag::SWIR;
    if (name == "FUSED") return CameraTag::FUSED;
    throw ConfigError("unknown camera tag '" + std::string(name) + "'");
}

namespace {

std::size_t default_vnir_count(CameraTag tag, std::size_t n) {
    switch (tag) {
        case CameraTag::VNIR: return n;
        case CameraTag::SWIR: return 0;
        case CameraTag::FUSED: return n;
    }
    return n;
}

}  // namespace

WavelengthGrid::WavelengthGrid(std::vector<double> bands, CameraTag tag)
    : WavelengthGrid(std::move(bands), tag, 0) {
    vnir_band_count_ = default_vnir_count(tag, bands_.size());
}

WavelengthGrid::WavelengthGrid(std::vector<double> bands, CameraTag tag, std::size_t vnir_band_count)
    : bands_(std::move(bands)), tag_(tag), vnir_band_count_(vnir_band_count) {
    BH3D_REQUIRE(!bands_.empty(), ValidationError, "wavelength grid must not be empty");
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        const double b = bands_[i];
        if (!std::isfinite(b) || b < kMinWavelengthNm || b > kMaxWavelengthNm) {
            throw ValidationError("band " + std::to_string(i) + " (" + std::to_string(b) +
                                  " nm) outside [450, 1500] nm");
        }
        if (i > 0 && !(b > bands_[i - 1])) {
            throw ValidationError("bands must be strictly increasing (band " + std::to_string(i) + ")");
        }
    }
    BH3D_REQUIRE(vnir_band_count_ <= bands_.size(), ValidationError, "VNIR band count exceeds grid size");
    if (tag_ == CameraTag::VNIR) vnir_band_count_ = bands_.size();
    if (tag_ == CameraTag::SWIR) vnir_band_count_ = 0;
}

WavelengthGrid WavelengthGrid::uniform(double start, double stop, double step, CameraTag tag) {
    BH3D_REQUIRE(step > 0.0, ValidationError, "grid step must be positive");
    std::vector<double> bands;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) bands.push_back(start + static_cast<double>(i) * step);
    return WavelengthGrid(std::move(bands), tag);
}

WavelengthGrid WavelengthGrid::vnir_default() { return uniform(450.0, 890.0, 20.0, CameraTag::VNIR); }

WavelengthGrid WavelengthGrid::swir_default() { return uniform(875.0, 1500.0, 25.0, CameraTag::SWIR); }

WavelengthGrid WavelengthGrid::union_of(const WavelengthGrid& a, const WavelengthGrid& b, CameraTag tag) {
    std::vector<double> all(a.bands().begin(), a.bands().end());
    all.insert(all.end(), b.bands().begin(), b.bands().end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end(), [](double x, double y) { return std::abs(x - y) < 1e-9; }),
              all.end());
    return WavelengthGrid(std::move(all), tag);
}

CameraTag WavelengthGrid::band_source(std::size_t i) const {
    switch (tag_) {
        case CameraTag::VNIR: return CameraTag::VNIR;
        case CameraTag::SWIR: return CameraTag::SWIR;
        case CameraTag::FUSED: return i < vnir_band_count_ ? CameraTag::VNIR : CameraTag::SWIR;
    }
    return tag_;
}

std::vector<double> WavelengthGrid::band_widths() const {
    const std::size_t n = bands_.size();
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    w[0] = 0.5 * (bands_[1] - bands_[0]);
    w[n - 1] = 0.5 * (bands_[n - 1] - bands_[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (bands_[i + 1] - bands_[i - 1]);
    return w;
}

std::optional<std::size_t> WavelengthGrid::find(double lambda, double tol) const {
    for (std::size_t i = 0; i < bands_.size(); ++i) {
        if (std::abs(bands_[i] - lambda) <= tol) return i;
    }
    return std::nullopt;
}

}  // namespace bh3d
