#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <json.hpp>

namespace bh3d::forward {

/// Sample positions of the calibration lattice: pixel x, pixel y, depth (m), wavelength (nm).
struct FieldAxes {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> depth;
    std::vector<double> wavelength;

    std::size_t size() const { return x.size() * y.size() * depth.size() * wavelength.size(); }
    void validate() const;
    bool operator==(const FieldAxes&) const = default;
};

/**
 * @brief Dense Gaussian mean/std fields mu(x, y, Z, lambda), sigma(x, y, Z, lambda), in degrees.
 *
 * Interpolation is bilinear across the pixel axes and monotone cubic (PCHIP)
 * across depth and wavelength. Queries outside the lattice clamp to its hull;
 * queries on lattice points return the stored samples exactly.
 */
class GaussianField {
public:
    struct Sample {
        double mu;
        double sigma;
    };

    GaussianField() = default;
    /// Samples are laid out with wavelength fastest: ((ix * ny + iy) * nz + iz) * nl + il.
    GaussianField(FieldAxes axes, std::vector<double> mu, std::vector<double> sigma);

    Sample sample(double x, double y, double depth, double lambda) const;

    const FieldAxes& axes() const { return axes_; }
    std::size_t index(std::size_t ix, std::size_t iy, std::size_t iz, std::size_t il) const;
    double mu_at(std::size_t ix, std::size_t iy, std::size_t iz, std::size_t il) const { return mu_[index(ix, iy, iz, il)]; }
    double sigma_at(std::size_t ix, std::size_t iy, std::size_t iz, std::size_t il) const {
        return sigma_[index(ix, iy, iz, il)];
    }
    const std::vector<double>& mu_samples() const { return mu_; }
    const std::vector<double>& sigma_samples() const { return sigma_; }
    bool empty() const { return mu_.empty(); }

private:
    double line_value(const std::vector<double>& values, const std::vector<double>& slopes, std::size_t ix,
                      std::size_t iy, double depth, double lambda) const;

    FieldAxes axes_;
    std::vector<double> mu_;
    std::vector<double> sigma_;
    std::vector<double> mu_slopes_;
    std::vector<double> sigma_slopes_;
};

/// Binary lattice (`<stem>.mu.bin`, `<stem>.sigma.bin`) plus JSON axes sidecar `<stem>.json`.
void write_field(const std::filesystem::path& stem, const GaussianField& field);
GaussianField read_field(const std::filesystem::path& stem);

}  // namespace bh3d::forward
