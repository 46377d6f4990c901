#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "bh3d/calibration/calibration.hpp"
#include "bh3d/core/error.hpp"

namespace bh3d::calib {

namespace {

constexpr double kAxisTolerance = 1e-9;

std::vector<double> unique_axis(std::span<const LatticeSample> samples, double LatticeSample::*member) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.*member);
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double a : v) {
        if (out.empty() || a - out.back() > kAxisTolerance * std::max(1.0, std::abs(a))) out.push_back(a);
    }
    return out;
}

std::size_t axis_index(const std::vector<double>& axis, double value) {
    const auto it = std::lower_bound(axis.begin(), axis.end(), value - kAxisTolerance * std::max(1.0, std::abs(value)));
    return static_cast<std::size_t>(it - axis.begin());
}

std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

}  // namespace

forward::GaussianField build_gaussian_field(std::span<const LatticeSample> samples) {
    BH3D_REQUIRE(!samples.empty(), ValidationError, "no calibration samples");
    forward::FieldAxes axes;
    axes.x = unique_axis(samples, &LatticeSample::x);
    axes.y = unique_axis(samples, &LatticeSample::y);
    axes.depth = unique_axis(samples, &LatticeSample::depth);
    axes.wavelength = unique_axis(samples, &LatticeSample::lambda);

    const std::size_t total = axes.size();
    std::vector<double> mu(total, 0.0), sigma(total, 0.0);
    std::vector<char> seen(total, 0);
    auto flat = [&](std::size_t ix, std::size_t iy, std::size_t iz, std::size_t il) {
        return ((ix * axes.y.size() + iy) * axes.depth.size() + iz) * axes.wavelength.size() + il;
    };
    for (const auto& s : samples) {
        const std::size_t k = flat(axis_index(axes.x, s.x), axis_index(axes.y, s.y), axis_index(axes.depth, s.depth),
                                   axis_index(axes.wavelength, s.lambda));
        if (seen[k]) {
            throw ValidationError("duplicate calibration sample at x=" + fmt(s.x) + " y=" + fmt(s.y) +
                                  " Z=" + fmt(s.depth) + " lambda=" + fmt(s.lambda));
        }
        seen[k] = 1;
        mu[k] = s.mu;
        sigma[k] = s.sigma;
    }

    std::vector<std::string> missing;
    std::size_t missing_count = 0;
    for (std::size_t ix = 0; ix < axes.x.size(); ++ix)
        for (std::size_t iy = 0; iy < axes.y.size(); ++iy)
            for (std::size_t iz = 0; iz < axes.depth.size(); ++iz)
                for (std::size_t il = 0; il < axes.wavelength.size(); ++il) {
                    if (seen[flat(ix, iy, iz, il)]) continue;
                    ++missing_count;
                    if (missing.size() < 20) {
                        missing.push_back("(x=" + fmt(axes.x[ix]) + ", y=" + fmt(axes.y[iy]) + ", Z=" +
                                          fmt(axes.depth[iz]) + ", lambda=" + fmt(axes.wavelength[il]) + ")");
                    }
                }
    if (missing_count > 0) {
        std::string msg = "incomplete calibration lattice, " + std::to_string(missing_count) + " missing cell(s):";
        for (const auto& m : missing) msg += " " + m;
        if (missing_count > missing.size()) msg += " ...";
        throw ValidationError(msg);
    }

    for (std::size_t ix = 0; ix < axes.x.size(); ++ix)
        for (std::size_t iy = 0; iy < axes.y.size(); ++iy)
            for (std::size_t iz = 0; iz < axes.depth.size(); ++iz)
                for (std::size_t il = 1; il < axes.wavelength.size(); ++il) {
                    if (!(mu[flat(ix, iy, iz, il)] > mu[flat(ix, iy, iz, il - 1)])) {
                        throw ValidationError("mu is not increasing in wavelength along the line x=" + fmt(axes.x[ix]) +
                                              " y=" + fmt(axes.y[iy]) + " Z=" + fmt(axes.depth[iz]) +
                                              " (between " + fmt(axes.wavelength[il - 1]) + " and " +
                                              fmt(axes.wavelength[il]) + " nm)");
                    }
                }
    return forward::GaussianField(std::move(axes), std::move(mu), std::move(sigma));
}

void write_fit_csv(const std::filesystem::path& path, std::span<const AngularProfile> profiles,
                   std::span<const GaussianFit> fits) {
    BH3D_REQUIRE(profiles.size() == fits.size(), ContractError, "profile and fit counts differ");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "x,y,Z,lambda,mu_deg,sigma_deg,amplitude,residual\n" << std::setprecision(17);
    for (std::size_t k = 0; k < fits.size(); ++k) {
        const auto& p = profiles[k];
        const auto& f = fits[k];
        out << p.x << ',' << p.y << ',' << p.depth << ',' << p.lambda << ',' << f.mu << ',' << f.sigma << ','
            << f.amplitude << ',' << f.residual << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bh3d::calib
