#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <string>

#include "bh3d/calibration/calibration.hpp"
#include "bh3d/core/adam.hpp"
#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"

namespace bh3d::calib {

ResponseReport estimate_radiometric_response(const ScanStack& stack, const forward::GaussianField& field,
                                             const DepthMap& depth, const WavelengthGrid& grid,
                                             const ResponseOptions& options) {
    BH3D_REQUIRE(depth.width == stack.width() && depth.height == stack.height(), ContractError,
                 "depth map and scan stack dimensions differ");
    BH3D_REQUIRE(options.pixel_stride >= 1, ConfigError, "pixel stride must be at least 1");
    BH3D_REQUIRE(options.target_reflectance > 0.0, ConfigError, "target reflectance must be positive");
    BH3D_REQUIRE(!grid.empty(), ContractError, "empty reconstruction grid");

    // Pixels used in the fit.
    std::vector<std::size_t> pixels;
    for (int y = 0; y < stack.height(); y += static_cast<int>(options.pixel_stride)) {
        for (int x = 0; x < stack.width(); x += static_cast<int>(options.pixel_stride)) {
            const std::size_t p = stack.pixel_index(x, y);
            if (stack.valid()[p] && depth.is_valid(p)) pixels.push_back(p);
        }
    }
    BH3D_REQUIRE(!pixels.empty(), DomainError, "no valid pixels for radiometric calibration");

    const std::size_t n = stack.angle_count();
    const std::size_t m = grid.size();
    const auto angles = stack.angles();
    const auto widths = grid.band_widths();

    // basis[(k * n + i) * m + j]: intensity at angle i of pixel k per unit Psi_j.
    std::vector<double> basis(pixels.size() * n * m);
    std::vector<double> measured(pixels.size() * n);
    parallel_for(0, pixels.size(), [&](std::size_t k) {
        const std::size_t p = pixels[k];
        const int x = static_cast<int>(p % static_cast<std::size_t>(stack.width()));
        const int y = static_cast<int>(p / static_cast<std::size_t>(stack.width()));
        const double z = depth.depth[p];
        const double inv_z2 = options.target_reflectance / (z * z);
        for (std::size_t j = 0; j < m; ++j) {
            const auto g = field.sample(x, y, z, grid[j]);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = angles[i] - g.mu;
                basis[(k * n + i) * m + j] = std::exp(-d * d / (2.0 * g.sigma * g.sigma)) * widths[j] * inv_z2;
            }
        }
        const auto s = stack.samples(p);
        std::copy(s.begin(), s.end(), measured.begin() + static_cast<std::ptrdiff_t>(k * n));
    });

    double signal = 0.0, basis_total = 0.0;
    for (double v : measured) signal += v;
    for (double v : basis) basis_total += v;
    if (!(signal > 0.0)) throw DomainError("radiometric calibration stack carries no signal");
    const double eps = options.smoothing * signal / static_cast<double>(measured.size());
    const double eps2 = eps * eps;

    const std::size_t rows = pixels.size() * n;
    // Loss and gradient in u = log Psi; smoothed |r| = sqrt(r^2 + eps^2) - eps.
    auto objective = [&](const std::vector<double>& u, std::vector<double>& grad) {
        std::vector<double> psi(m);
        for (std::size_t j = 0; j < m; ++j) psi[j] = std::exp(u[j]);
        std::vector<double> g(m, 0.0);
        double loss = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* b = basis.data() + r * m;
            double pred = 0.0;
            for (std::size_t j = 0; j < m; ++j) pred += b[j] * psi[j];
            const double res = pred - measured[r];
            const double root = std::sqrt(res * res + eps2);
            loss += root - eps;
            const double w = res / root;
            for (std::size_t j = 0; j < m; ++j) g[j] += w * b[j];
        }
        for (std::size_t j = 0; j < m; ++j) grad[j] = g[j] * psi[j];
        return loss;
    };

    // Adam from a flat start, in log space.
    std::vector<double> u(m, std::log(signal / basis_total));
    AdamOptions ao;
    ao.learning_rate = options.learning_rate;
    ao.max_iterations = options.max_iterations;
    ao.rel_tolerance = options.tolerance;
    ao.patience = options.patience;
    const AdamResult run = MonotoneAdam(ao).minimize(u, objective);
    std::vector<double> history = run.loss_history;
    std::vector<double> psi(m);
    for (std::size_t j = 0; j < m; ++j) psi[j] = std::exp(u[j]);

    // Adam stalls when neighboring bands overlap strongly. Polish with iteratively reweighted
    // least squares on the same smoothed l1 objective; each accepted step lowers the loss.
    auto loss_at = [&](const std::vector<double>& v) {
        std::vector<double> lu(m), g(m);
        for (std::size_t j = 0; j < m; ++j) lu[j] = std::log(v[j]);
        return objective(lu, g);
    };
    const double floor = 1e-12 * std::exp(std::log(signal / basis_total));
    double loss = loss_at(psi);
    bool converged = false;
    for (int it = 0; it < options.refine_iterations; ++it) {
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
        for (std::size_t r = 0; r < rows; ++r) {
            const Eigen::Map<const Eigen::VectorXd> b(basis.data() + r * m, static_cast<Eigen::Index>(m));
            double pred = 0.0;
            for (std::size_t j = 0; j < m; ++j) pred += b[static_cast<Eigen::Index>(j)] * psi[j];
            const double res = pred - measured[r];
            const double w = 1.0 / std::sqrt(res * res + eps2);
            normal.selfadjointView<Eigen::Lower>().rankUpdate(b, w);
            rhs += w * measured[r] * b;
        }
        const Eigen::VectorXd next = normal.selfadjointView<Eigen::Lower>().ldlt().solve(rhs);
        std::vector<double> cand(m);
        for (std::size_t j = 0; j < m; ++j) cand[j] = std::max(next[static_cast<Eigen::Index>(j)], floor);
        const double cand_loss = loss_at(cand);
        if (!std::isfinite(cand_loss) || cand_loss > loss) {
            converged = true;
            break;
        }
        double change = 0.0;
        for (std::size_t j = 0; j < m; ++j) change = std::max(change, std::abs(cand[j] / psi[j] - 1.0));
        const double gain = loss - cand_loss;
        psi = cand;
        loss = cand_loss;
        history.push_back(loss);
        if (change < options.refine_tolerance || gain <= options.refine_loss_tolerance * loss) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericalError("radiometric response did not converge after " +
                                 std::to_string(run.iterations + options.refine_iterations) +
                                 " iterations (mean abs residual " + std::to_string(loss / static_cast<double>(rows)) +
                                 ")",
                             run.iterations + options.refine_iterations, loss);
    }

    ResponseReport report;
    report.response.grid = grid;
    report.response.psi.resize(m);
    report.response.psi = psi;
    report.loss_history = history;
    report.iterations = static_cast<int>(history.size()) - 1;
    report.response.validate();
    return report;
}

}  // namespace bh3d::calib
