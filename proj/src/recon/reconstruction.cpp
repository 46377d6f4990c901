#include "bh3d/recon/reconstruction.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "bh3d/core/adam.hpp"
#include "bh3d/core/error.hpp"
#include "bh3d/core/io.hpp"
#include "bh3d/core/parallel.hpp"

namespace bh3d::recon {

namespace {

struct Surrogate {
    double eps;
    double value(double r) const { return std::sqrt(r * r + eps * eps) - eps; }
    double slope(double r) const { return r / std::sqrt(r * r + eps * eps); }
};

}  // namespace

void ReconConfig::validate() const {
    BH3D_REQUIRE(learning_rate > 0.0, ConfigError, "learning rate must be positive");
    BH3D_REQUIRE(max_iterations >= 0, ConfigError, "max iterations must be non-negative");
    BH3D_REQUIRE(rel_tolerance >= 0.0, ConfigError, "convergence threshold must be non-negative");
    BH3D_REQUIRE(patience >= 1, ConfigError, "patience must be at least 1");
    BH3D_REQUIRE(lambda_spectral >= 0.0 && lambda_spatial >= 0.0, ConfigError,
                 "regularization strengths must be non-negative");
    BH3D_REQUIRE(tv_epsilon > 0.0, ConfigError, "sparsity smoothing must be positive");
    BH3D_REQUIRE(checkpoint_every >= 0, ConfigError, "checkpoint interval must be non-negative");
}

nlohmann::json ReconConfig::to_json() const {
    return {{"learning_rate", learning_rate},
            {"max_iterations", max_iterations},
            {"rel_tolerance", rel_tolerance},
            {"patience", patience},
            {"lambda_spectral", lambda_spectral},
            {"lambda_spatial", lambda_spatial},
            {"tv_epsilon", tv_epsilon},
            {"nonnegative", nonnegative},
            {"init", init == InitMode::MatchedFilter ? "matched-filter" : "zero"},
            {"checkpoint_every", checkpoint_every},
            {"checkpoint_dir", checkpoint_dir.string()}};
}

ReconConfig ReconConfig::from_json(const nlohmann::json& j) {
    ReconConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.rel_tolerance = j.value("rel_tolerance", c.rel_tolerance);
        c.patience = j.value("patience", c.patience);
        c.lambda_spectral = j.value("lambda_spectral", c.lambda_spectral);
        c.lambda_spatial = j.value("lambda_spatial", c.lambda_spatial);
        c.tv_epsilon = j.value("tv_epsilon", c.tv_epsilon);
        c.nonnegative = j.value("nonnegative", c.nonnegative);
        const std::string init = j.value("init", std::string("matched-filter"));
        if (init == "matched-filter") {
            c.init = InitMode::MatchedFilter;
        } else if (init == "zero") {
            c.init = InitMode::Zero;
        } else {
            throw ConfigError("unknown init mode '" + init + "' (expected matched-filter or zero)");
        }
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        c.checkpoint_dir = j.value("checkpoint_dir", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed reconstruction config: ") + e.what());
    }
    c.validate();
    return c;
}

ReconstructionProblem::ReconstructionProblem(int width, int height, std::vector<double> psi,
                                             const std::vector<forward::SystemMatrix>& s,
                                             const std::vector<std::vector<double>>& measured, Mask active)
    : width_(width), height_(height), bands_(psi.size()), psi_(std::move(psi)), active_(std::move(active)) {
    const std::size_t np = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    BH3D_REQUIRE(width > 0 && height > 0, ContractError, "problem dimensions must be positive");
    BH3D_REQUIRE(active_.size() == np && s.size() == np && measured.size() == np, ContractError,
                 "per-pixel inputs must cover the image");
    for (double v : psi_) {
        if (!(v > 0.0)) throw DomainError("radiometric response must be positive in every band");
    }
    const std::size_t m = bands_;
    gram_.assign(np * m * m, 0.0);
    rhs_.assign(np * m, 0.0);
    energy_.assign(np, 0.0);
    parallel_for(0, np, [&](std::size_t p) {
        if (!active_[p]) return;
        const auto& sp = s[p];
        const auto& ip = measured[p];
        BH3D_REQUIRE(static_cast<std::size_t>(sp.cols()) == m && static_cast<std::size_t>(sp.rows()) == ip.size(),
                     ContractError, "system matrix does not match the measurements");
        const Eigen::Map<const Eigen::VectorXd> iv(ip.data(), static_cast<Eigen::Index>(ip.size()));
        Eigen::Map<Eigen::MatrixXd> g(gram_.data() + p * m * m, static_cast<Eigen::Index>(m),
                                      static_cast<Eigen::Index>(m));
        Eigen::Map<Eigen::VectorXd> b(rhs_.data() + p * m, static_cast<Eigen::Index>(m));
        g.noalias() = sp.transpose() * sp;
        b.noalias() = sp.transpose() * iv;
        energy_[p] = iv.squaredNorm();
    });
}

ReconstructionProblem ReconstructionProblem::from_stack(const ScanStack& stack, const DepthMap& depth,
                                                        const forward::GaussianField& field,
                                                        const forward::RadiometricResponse& response) {
    BH3D_REQUIRE(depth.width == stack.width() && depth.height == stack.height(), ContractError,
                 "depth map and scan stack dimensions differ");
    response.validate();
    const std::size_t np = stack.pixel_count();
    Mask active(np, 0);
    for (std::size_t p = 0; p < np; ++p) active[p] = (stack.valid()[p] && depth.is_valid(p)) ? 1 : 0;

    // Assemble S one row of pixels at a time to bound memory.
    ReconstructionProblem problem;
    problem.width_ = stack.width();
    problem.height_ = stack.height();
    problem.bands_ = response.grid.size();
    problem.psi_ = response.psi;
    problem.active_ = active;
    const std::size_t m = problem.bands_;
    problem.gram_.assign(np * m * m, 0.0);
    problem.rhs_.assign(np * m, 0.0);
    problem.energy_.assign(np, 0.0);
    const auto angles = stack.angles();
    parallel_for(0, np, [&](std::size_t p) {
        if (!active[p]) return;
        const int x = static_cast<int>(p % static_cast<std::size_t>(stack.width()));
        const int y = static_cast<int>(p / static_cast<std::size_t>(stack.width()));
        const forward::SystemMatrix s = forward::assemble_system_matrix(x, y, depth.depth[p], angles, field, response);
        const auto samples = stack.samples(p);
        const Eigen::Map<const Eigen::VectorXd> iv(samples.data(), static_cast<Eigen::Index>(samples.size()));
        Eigen::Map<Eigen::MatrixXd> g(problem.gram_.data() + p * m * m, static_cast<Eigen::Index>(m),
                                      static_cast<Eigen::Index>(m));
        Eigen::Map<Eigen::VectorXd> b(problem.rhs_.data() + p * m, static_cast<Eigen::Index>(m));
        g.noalias() = s.transpose() * s;
        b.noalias() = s.transpose() * iv;
        problem.energy_[p] = iv.squaredNorm();
    });
    return problem;
}

double ReconstructionProblem::data_loss(const std::vector<double>& h) const {
    ReconConfig none;
    none.lambda_spectral = 0.0;
    none.lambda_spatial = 0.0;
    return loss(h, nullptr, none);
}

double ReconstructionProblem::loss(const std::vector<double>& h, std::vector<double>* grad,
                                   const ReconConfig& config) const {
    const std::size_t m = bands_;
    const std::size_t w = static_cast<std::size_t>(width_);
    BH3D_REQUIRE(h.size() == w * static_cast<std::size_t>(height_) * m, ContractError,
                 "reflectance vector does not match the problem size");
    if (grad) grad->assign(h.size(), 0.0);
    const Surrogate phi{config.tv_epsilon};
    std::vector<double> inv_psi(m);
    for (std::size_t j = 0; j < m; ++j) inv_psi[j] = 1.0 / psi_[j];
    const double ls = config.lambda_spectral;
    const double lx = config.lambda_spatial;

    // Row partial sums keep the total independent of scheduling.
    std::vector<double> row_loss(static_cast<std::size_t>(height_), 0.0);
    parallel_for(0, static_cast<std::size_t>(height_), [&](std::size_t y) {
        double acc = 0.0;
        std::vector<double> gh(m);
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t p = y * w + x;
            if (!active_[p]) continue;
            const double* hp = h.data() + p * m;
            const double* g = gram_.data() + p * m * m;
            const double* b = rhs_.data() + p * m;
            double quad = 0.0, lin = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < m; ++k) s += g[j * m + k] * hp[k];
                gh[j] = s;
                quad += s * hp[j];
                lin += b[j] * hp[j];
            }
            acc += quad - 2.0 * lin + energy_[p];
            double* gp = grad ? grad->data() + p * m : nullptr;
            if (gp) {
                for (std::size_t j = 0; j < m; ++j) gp[j] += 2.0 * (gh[j] - b[j]);
            }

            if (ls > 0.0) {
                for (std::size_t j = 0; j + 1 < m; ++j) {
                    const double r = hp[j + 1] - hp[j];
                    acc += ls * inv_psi[j] * phi.value(r);
                    if (gp) {
                        const double d = ls * inv_psi[j] * phi.slope(r);
                        gp[j + 1] += d;
                        gp[j] -= d;
                    }
                }
            }
            if (lx > 0.0) {
                // Loss counts each forward pair once; the gradient gathers both pairs touching p.
                const bool right = x + 1 < w && active_[p + 1];
                const bool down = y + 1 < static_cast<std::size_t>(height_) && active_[p + w];
                const bool left = x > 0 && active_[p - 1];
                const bool up = y > 0 && active_[p - w];
                for (std::size_t j = 0; j < m; ++j) {
                    const double c = lx * inv_psi[j];
                    if (right) {
                        const double r = h[(p + 1) * m + j] - hp[j];
                        acc += c * phi.value(r);
                        if (gp) gp[j] -= c * phi.slope(r);
                    }
                    if (down) {
                        const double r = h[(p + w) * m + j] - hp[j];
                        acc += c * phi.value(r);
                        if (gp) gp[j] -= c * phi.slope(r);
                    }
                    if (gp && left) gp[j] += c * phi.slope(hp[j] - h[(p - 1) * m + j]);
                    if (gp && up) gp[j] += c * phi.slope(hp[j] - h[(p - w) * m + j]);
                }
            }
        }
        row_loss[y] = acc;
    });
    double total = 0.0;
    for (double v : row_loss) total += v;
    return total;
}

std::vector<double> ReconstructionProblem::matched_filter() const {
    const std::size_t m = bands_;
    const std::size_t np = active_.size();
    std::vector<double> h(np * m, 0.0);
    for (std::size_t p = 0; p < np; ++p) {
        if (!active_[p]) continue;
        const double* g = gram_.data() + p * m * m;
        const double* b = rhs_.data() + p * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double norm2 = g[j * m + j];
            h[p * m + j] = std::max(0.0, b[j] / (norm2 + 1e-300));
        }
    }
    return h;
}

namespace {

void write_checkpoint(const ReconConfig& config, const SpectralCube& cube, const std::vector<double>& history,
                      int iteration) {
    std::filesystem::create_directories(config.checkpoint_dir);
    const auto stem = config.checkpoint_dir / ("checkpoint_" + std::to_string(iteration));
    io::write_cube(stem, cube);
    std::ofstream out(config.checkpoint_dir / ("checkpoint_" + std::to_string(iteration) + "_loss.json"));
    if (!out) throw IoError("cannot write checkpoint in " + config.checkpoint_dir.string());
    out << nlohmann::json{{"iteration", iteration}, {"loss_history", history}}.dump(2) << '\n';
}

SpectralCube to_cube(const ReconstructionProblem& problem, const WavelengthGrid& grid, const std::vector<double>& h) {
    SpectralCube cube(problem.width(), problem.height(), grid, h);
    cube.valid() = problem.active();
    return cube;
}

}  // namespace

ReconReport reconstruct(const ReconstructionProblem& problem, const WavelengthGrid& grid, const ReconConfig& config) {
    config.validate();
    BH3D_REQUIRE(grid.size() == problem.bands(), ContractError, "grid does not match the problem bands");
    if (config.checkpoint_every > 0) {
        BH3D_REQUIRE(!config.checkpoint_dir.empty(), ConfigError, "checkpoint interval set without a directory");
    }
    std::vector<double> h = config.init == InitMode::MatchedFilter
                                ? problem.matched_filter()
                                : std::vector<double>(problem.active().size() * problem.bands(), 0.0);

    AdamOptions ao;
    ao.learning_rate = config.learning_rate;
    ao.max_iterations = config.max_iterations;
    ao.rel_tolerance = config.rel_tolerance;
    ao.patience = config.patience;

    long evaluations = 0;
    auto objective = [&](const std::vector<double>& x, std::vector<double>& g) {
        const double l = problem.loss(x, &g, config);
        if (!std::isfinite(l)) {
            throw NumericalError("reconstruction loss became non-finite at iteration " + std::to_string(evaluations),
                                 evaluations, l);
        }
        ++evaluations;
        return l;
    };
    MonotoneAdam::Projection project;
    if (config.nonnegative) {
        project = [](std::vector<double>& x) {
            for (double& v : x) v = std::max(v, 0.0);
        };
    }
    std::vector<double> history;
    MonotoneAdam::Observer observe;
    if (config.checkpoint_every > 0) {
        observe = [&](int iteration, double loss, const std::vector<double>& x) {
            history.push_back(loss);
            if (iteration % config.checkpoint_every == 0) write_checkpoint(config, to_cube(problem, grid, x), history, iteration);
            return true;
        };
    }
    const AdamResult run = MonotoneAdam(ao).minimize(h, objective, project, observe);

    // Inactive pixels carry a zero spectrum.
    const std::size_t m = problem.bands();
    for (std::size_t p = 0; p < problem.active().size(); ++p) {
        if (!problem.active()[p]) std::fill(h.begin() + static_cast<std::ptrdiff_t>(p * m),
                                            h.begin() + static_cast<std::ptrdiff_t>((p + 1) * m), 0.0);
    }
    ReconReport report{to_cube(problem, grid, h), run.loss_history, run.iterations, run.converged};
    return report;
}

ReconReport reconstruct_reflectance(const ScanStack& stack, const DepthMap& depth, const forward::GaussianField& field,
                                    const forward::RadiometricResponse& response, const ReconConfig& config) {
    config.validate();
    const auto problem = ReconstructionProblem::from_stack(stack, depth, field, response);
    return reconstruct(problem, response.grid, config);
}

ReconReport reconstruct_reflectance(const ScanStack& stack, const DepthMap& depth, const forward::GaussianField& field,
                                    const forward::IlluminantModel& illum, const forward::SensorModel& sensor,
                                    const WavelengthGrid& grid, const ReconConfig& config) {
    return reconstruct_reflectance(stack, depth, field, forward::RadiometricResponse::from_models(grid, illum, sensor),
                                   config);
}

}  // namespace bh3d::recon
