#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bh3d::forward {

/// Tabulated wavelength curve, linearly interpolated and held constant past its ends.
class SpectralCurve {
public:
    SpectralCurve() = default;
    SpectralCurve(std::vector<double> wavelengths_nm, std::vector<double> values);
    static SpectralCurve constant(double value);

    double operator()(double lambda_nm) const;
    std::span<const double> wavelengths() const { return wavelengths_; }
    std::span<const double> values() const { return values_; }
    bool empty() const { return values_.empty(); }

    /// {"interpolation": "linear", "samples": {"450": v, ...}}
    nlohmann::json to_json() const;
    static SpectralCurve from_json(const nlohmann::json& j);

    SpectralCurve scaled(double factor) const;

private:
    std::vector<double> wavelengths_;
    std::vector<double> values_;
};

}  // namespace bh3d::forward
