#pragma once

#include <span>
#include <vector>

namespace bh3d::forward {

/// Fritsch-Carlson (PCHIP) knot derivatives; shape preserving, no overshoot between knots.
std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y);

/// Cubic Hermite evaluation with the given knot slopes. Queries are clamped to
/// [x.front(), x.back()] and a query equal to a knot returns that knot's value exactly.
double hermite_eval(std::span<const double> x, std::span<const double> y, std::span<const double> slopes, double q);

/// Convenience: pchip_slopes + hermite_eval for small inline lines.
double pchip_eval(std::span<const double> x, std::span<const double> y, double q);

/// Locates q in ascending knots: returns interval index k with x[k] <= q < x[k+1]
/// (or the last interval for q == x.back()) and the normalized position t.
void locate(std::span<const double> x, double q, std::size_t& k, double& t);

}  // namespace bh3d::forward
