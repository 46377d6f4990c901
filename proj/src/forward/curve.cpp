#include "bh3d/forward/curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "bh3d/core/error.hpp"

namespace bh3d::forward {

namespace {
constexpr double kConstantAnchor = 1000.0;
}

SpectralCurve::SpectralCurve(std::vector<double> wavelengths_nm, std::vector<double> values)
    : wavelengths_(std::move(wavelengths_nm)), values_(std::move(values)) {
    BH3D_REQUIRE(!values_.empty(), ValidationError, "spectral curve needs at least one sample");
    BH3D_REQUIRE(wavelengths_.size() == values_.size(), ValidationError, "curve sample count mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        BH3D_REQUIRE(std::isfinite(values_[i]) && std::isfinite(wavelengths_[i]), ValidationError,
                     "curve samples must be finite");
        if (i > 0) {
            BH3D_REQUIRE(wavelengths_[i] > wavelengths_[i - 1], ValidationError,
                         "curve wavelengths must be strictly increasing");
        }
    }
}

SpectralCurve SpectralCurve::constant(double value) { return SpectralCurve({kConstantAnchor}, {value}); }

double SpectralCurve::operator()(double lambda_nm) const {
    if (values_.size() == 1 || lambda_nm <= wavelengths_.front()) return values_.front();
    if (lambda_nm >= wavelengths_.back()) return values_.back();
    const auto it = std::upper_bound(wavelengths_.begin(), wavelengths_.end(), lambda_nm);
    const std::size_t hi = static_cast<std::size_t>(it - wavelengths_.begin());
    const std::size_t lo = hi - 1;
    const double t = (lambda_nm - wavelengths_[lo]) / (wavelengths_[hi] - wavelengths_[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
}

nlohmann::json SpectralCurve::to_json() const {
    nlohmann::json samples = nlohmann::json::object();
    char key[32];
    for (std::size_t i = 0; i < values_.size(); ++i) {
        std::snprintf(key, sizeof key, "%.10g", wavelengths_[i]);
        samples[key] = values_[i];
    }
    return {{"interpolation", "linear"}, {"samples", samples}};
}

SpectralCurve SpectralCurve::from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    const std::string interp = j.value("interpolation", "linear");
    BH3D_REQUIRE(interp == "linear", ConfigError, "unsupported curve interpolation '" + interp + "'");
    BH3D_REQUIRE(j.contains("samples") && j["samples"].is_object(), ConfigError, "curve JSON lacks 'samples'");
    std::map<double, double> ordered;
    for (const auto& [k, v] : j["samples"].items()) {
        try {
            ordered[std::stod(k)] = v.get<double>();
        } catch (const std::exception&) {
            throw ConfigError("curve sample key '" + k + "' is not a wavelength");
        }
    }
    std::vector<double> wl, val;
    for (const auto& [k, v] : ordered) {
        wl.push_back(k);
        val.push_back(v);
    }
    return SpectralCurve(std::move(wl), std::move(val));
}

SpectralCurve SpectralCurve::scaled(double factor) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= factor;
    return SpectralCurve(wavelengths_, std::move(v));
}

}  // namespace bh3d::forward
