#include "bh3d/forward/gaussian_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/io.hpp"
#include "bh3d/forward/monotone_cubic.hpp"

namespace bh3d::forward {

namespace {

void check_axis(const std::vector<double>& a, const char* name) {
    BH3D_REQUIRE(!a.empty(), ValidationError, std::string("field axis '") + name + "' is empty");
    for (std::size_t i = 0; i < a.size(); ++i) {
        BH3D_REQUIRE(std::isfinite(a[i]), ValidationError, std::string("field axis '") + name + "' not finite");
        if (i > 0) {
            BH3D_REQUIRE(a[i] > a[i - 1], ValidationError,
                         std::string("field axis '") + name + "' must be strictly increasing");
        }
    }
}

}  // namespace

void FieldAxes::validate() const {
    check_axis(x, "x");
    check_axis(y, "y");
    check_axis(depth, "depth");
    check_axis(wavelength, "wavelength");
    BH3D_REQUIRE(depth.front() > 0.0, ValidationError, "field depth samples must be positive");
}

GaussianField::GaussianField(FieldAxes axes, std::vector<double> mu, std::vector<double> sigma)
    : axes_(std::move(axes)), mu_(std::move(mu)), sigma_(std::move(sigma)) {
    axes_.validate();
    BH3D_REQUIRE(mu_.size() == axes_.size() && sigma_.size() == axes_.size(), ValidationError,
                 "field sample count does not match lattice size");
    for (std::size_t i = 0; i < mu_.size(); ++i) {
        BH3D_REQUIRE(std::isfinite(mu_[i]), ValidationError, "field mu samples must be finite");
        BH3D_REQUIRE(sigma_[i] > 0.0 && std::isfinite(sigma_[i]), ValidationError, "field sigma must be positive");
    }
    const std::size_t nl = axes_.wavelength.size();
    mu_slopes_.resize(mu_.size());
    sigma_slopes_.resize(sigma_.size());
    for (std::size_t start = 0; start < mu_.size(); start += nl) {
        const std::span<const double> wl(axes_.wavelength);
        const auto dm = pchip_slopes(wl, std::span<const double>(mu_.data() + start, nl));
        const auto ds = pchip_slopes(wl, std::span<const double>(sigma_.data() + start, nl));
        std::copy(dm.begin(), dm.end(), mu_slopes_.begin() + static_cast<std::ptrdiff_t>(start));
        std::copy(ds.begin(), ds.end(), sigma_slopes_.begin() + static_cast<std::ptrdiff_t>(start));
    }
}

std::size_t GaussianField::index(std::size_t ix, std::size_t iy, std::size_t iz, std::size_t il) const {
    return ((ix * axes_.y.size() + iy) * axes_.depth.size() + iz) * axes_.wavelength.size() + il;
}

double GaussianField::line_value(const std::vector<double>& values, const std::vector<double>& slopes,
                                 std::size_t ix, std::size_t iy, double depth, double lambda) const {
    const std::size_t nz = axes_.depth.size();
    const std::size_t nl = axes_.wavelength.size();
    const std::span<const double> wl(axes_.wavelength);
    std::array<double, 16> small{};
    std::vector<double> large;
    double* along_z = small.data();
    if (nz > small.size()) {
        large.resize(nz);
        along_z = large.data();
    }
    for (std::size_t iz = 0; iz < nz; ++iz) {
        const std::size_t start = index(ix, iy, iz, 0);
        along_z[iz] = hermite_eval(wl, std::span<const double>(values.data() + start, nl),
                                   std::span<const double>(slopes.data() + start, nl), lambda);
    }
    return pchip_eval(axes_.depth, std::span<const double>(along_z, nz), depth);
}

GaussianField::Sample GaussianField::sample(double x, double y, double depth, double lambda) const {
    BH3D_REQUIRE(!mu_.empty(), ContractError, "sampling an empty Gaussian field");
    std::size_t kx, ky;
    double tx, ty;
    locate(axes_.x, x, kx, tx);
    locate(axes_.y, y, ky, ty);
    if (tx == 1.0) ++kx, tx = 0.0;
    if (ty == 1.0) ++ky, ty = 0.0;
    const std::size_t kx1 = kx + 1 < axes_.x.size() ? kx + 1 : kx;
    const std::size_t ky1 = ky + 1 < axes_.y.size() ? ky + 1 : ky;

    auto bilinear = [&](const std::vector<double>& values, const std::vector<double>& slopes) {
        const double v00 = line_value(values, slopes, kx, ky, depth, lambda);
        if (tx == 0.0 && ty == 0.0) return v00;
        const double v10 = tx == 0.0 ? v00 : line_value(values, slopes, kx1, ky, depth, lambda);
        const double v01 = ty == 0.0 ? v00 : line_value(values, slopes, kx, ky1, depth, lambda);
        const double v11 = (tx == 0.0) ? v01 : (ty == 0.0 ? v10 : line_value(values, slopes, kx1, ky1, depth, lambda));
        const double top = v00 + tx * (v10 - v00);
        const double bottom = v01 + tx * (v11 - v01);
        return top + ty * (bottom - top);
    };
    return {bilinear(mu_, mu_slopes_), bilinear(sigma_, sigma_slopes_)};
}

void write_field(const std::filesystem::path& stem_in, const GaussianField& field) {
    const auto stem = io::normalize_stem(stem_in);
    auto p = [&](const char* suffix) {
        auto s = stem;
        s += suffix;
        return s;
    };
    const auto& a = field.axes();
    const nlohmann::json j = {
        {"kind", "gaussian_field"},
        {"axes", {{"x", a.x}, {"y", a.y}, {"depth_m", a.depth}, {"wavelength_nm", a.wavelength}}},
        {"layout", "x, y, depth, wavelength (wavelength fastest)"},
        {"units", "degrees"},
        {"interpolation", {{"x", "linear"}, {"y", "linear"}, {"depth", "monotone-cubic"}, {"wavelength", "monotone-cubic"}}},
        {"dtype", "float32-le"},
        {"mu_payload", p(".mu.bin").filename().string()},
        {"sigma_payload", p(".sigma.bin").filename().string()},
    };
    io::write_f32(p(".mu.bin"), field.mu_samples());
    io::write_f32(p(".sigma.bin"), field.sigma_samples());
    std::ofstream out(p(".json"));
    if (!out) throw IoError("cannot write " + p(".json").string());
    out << j.dump(2) << '\n';
}

GaussianField read_field(const std::filesystem::path& stem_in) {
    const auto stem = io::normalize_stem(stem_in);
    auto p = [&](const char* suffix) {
        auto s = stem;
        s += suffix;
        return s;
    };
    std::ifstream in(p(".json"));
    if (!in) throw IoError("cannot open " + p(".json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed field sidecar: " + std::string(e.what()));
    }
    FieldAxes axes;
    axes.x = j.at("axes").at("x").get<std::vector<double>>();
    axes.y = j.at("axes").at("y").get<std::vector<double>>();
    axes.depth = j.at("axes").at("depth_m").get<std::vector<double>>();
    axes.wavelength = j.at("axes").at("wavelength_nm").get<std::vector<double>>();
    const std::size_t n = axes.size();
    return GaussianField(std::move(axes), io::read_f32(p(".mu.bin"), n), io::read_f32(p(".sigma.bin"), n));
}

}  // namespace bh3d::forward
