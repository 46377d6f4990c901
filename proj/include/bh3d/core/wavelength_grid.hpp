#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bh3d {

enum class CameraTag { VNIR, SWIR, FUSED };

std::string_view to_string(CameraTag tag);
CameraTag camera_tag_from_string(std::string_view name);

inline constexpr double kMinWavelengthNm = 450.0;
inline constexpr double kMaxWavelengthNm = 1500.0;

/**
 * @brief Strictly increasing list of band-center wavelengths in nm.
 *
 * Grids tagged FUSED also remember how many leading bands came from the VNIR
 * camera; the rest are SWIR bands.
 */
class WavelengthGrid {
public:
    WavelengthGrid() = default;
    WavelengthGrid(std::vector<double> bands, CameraTag tag);
    WavelengthGrid(std::vector<double> bands, CameraTag tag, std::size_t vnir_band_count);

    /// Inclusive arithmetic grid start, start+step, ... <= stop.
    static WavelengthGrid uniform(double start, double stop, double step, CameraTag tag);
    /// 450-890 nm at 20 nm (23 bands).
    static WavelengthGrid vnir_default();
    /// 875-1500 nm at 25 nm (26 bands).
    static WavelengthGrid swir_default();
    /// Sorted union of two grids; band centers present in both appear once.
    static WavelengthGrid union_of(const WavelengthGrid& a, const WavelengthGrid& b, CameraTag tag);

    std::span<const double> bands() const { return bands_; }
    std::size_t size() const { return bands_.size(); }
    bool empty() const { return bands_.empty(); }
    double operator[](std::size_t i) const { return bands_[i]; }
    double front() const { return bands_.front(); }
    double back() const { return bands_.back(); }
    CameraTag tag() const { return tag_; }

    /// Number of leading VNIR bands; equals size() for VNIR grids and 0 for SWIR grids.
    std::size_t vnir_band_count() const { return vnir_band_count_; }
    /// Camera that produced band i.
    CameraTag band_source(std::size_t i) const;

    /// Trapezoidal quadrature weights; a single-band grid has unit width.
    std::vector<double> band_widths() const;

    /// Index of a band center equal to `lambda` within `tol` nm.
    std::optional<std::size_t> find(double lambda, double tol = 1e-9) const;

    bool operator==(const WavelengthGrid& other) const = default;

private:
    std::vector<double> bands_;
    CameraTag tag_ = CameraTag::VNIR;
    std::size_t vnir_band_count_ = 0;
};

}  // namespace bh3d
