#pragma once

#include <span>
#include <vector>

#include "bh3d/core/image.hpp"
#include "bh3d/core/wavelength_grid.hpp"

namespace bh3d {

/// Spectral angle mapper in radians, in [0, pi]. Zero-norm inputs raise DomainError.
double spectral_angle(std::span<const double> a, std::span<const double> b);

/// Root mean squared difference. Length mismatch raises ContractError.
double rmse(std::span<const double> a, std::span<const double> b);
/// Cube RMSE over all bands of pixels valid in both cubes.
double rmse(const SpectralCube& a, const SpectralCube& b);

/// Linear interpolation of `values` (defined on `from`) at the band centers of `to`.
/// Throws RangeError when `to` reaches outside [from.front(), from.back()].
std::vector<double> resample_spectrum(std::span<const double> values, const WavelengthGrid& from,
                                      const WavelengthGrid& to);

}  // namespace bh3d
