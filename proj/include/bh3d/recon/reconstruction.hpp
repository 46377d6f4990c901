#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bh3d/core/image.hpp"
#include "bh3d/forward/gaussian_field.hpp"
#include "bh3d/forward/models.hpp"
#include "bh3d/forward/render.hpp"

namespace bh3d::recon {

enum class InitMode { MatchedFilter, Zero };

struct ReconConfig {
    double learning_rate = 0.1;
    int max_iterations = 2000;
    /// Stop once the loss improves by less than this fraction over `patience` iterations.
    double rel_tolerance = 1e-6;
    int patience = 20;
    double lambda_spectral = 1.0;
    double lambda_spatial = 1.0;
    /// Smoothing of |r| in the sparsity terms (reflectance units).
    double tv_epsilon = 1e-8;
    bool nonnegative = true;
    InitMode init = InitMode::MatchedFilter;
    /// Write a checkpoint every this many accepted iterations (0 disables).
    int checkpoint_every = 0;
    std::filesystem::path checkpoint_dir;

    void validate() const;
    nlohmann::json to_json() const;
    static ReconConfig from_json(const nlohmann::json& j);
};

/**
 * @brief Per-camera reconstruction objective
 *
 *   sum_p |S_p H_p - I_p|^2
 *   + lambda_spectral * sum_p sum_j phi(H_p,j+1 - H_p,j) / Psi_j
 *   + lambda_spatial  * sum_{p~q} sum_j phi(H_q,j - H_p,j) / Psi_j
 *
 * with phi(r) = sqrt(r^2 + eps^2) - eps and forward differences between
 * horizontally / vertically adjacent active pixels. The data term is held as
 * per-pixel normal equations (G = S^T S, b = S^T I, c = I^T I).
 */
class ReconstructionProblem {
public:
    /// Builds the problem from per-pixel system matrices. `active` selects the pixels with data.
    ReconstructionProblem(int width, int height, std::vector<double> psi, const std::vector<forward::SystemMatrix>& s,
                          const std::vector<std::vector<double>>& measured, Mask active);

    /// Assembles S at every pixel with valid depth and valid measurements.
    static ReconstructionProblem from_stack(const ScanStack& stack, const DepthMap& depth,
                                            const forward::GaussianField& field,
                                            const forward::RadiometricResponse& response);

    /// Loss at h (layout (y * width + x) * bands + j); writes the gradient when `grad` is non-null.
    double loss(const std::vector<double>& h, std::vector<double>* grad, const ReconConfig& config) const;
    /// Data term only.
    double data_loss(const std::vector<double>& h) const;

    /// H0_j = max(0, <S_j, I> / (|S_j|^2 + eps)) at active pixels, zero elsewhere.
    std::vector<double> matched_filter() const;

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t bands() const { return bands_; }
    const Mask& active() const { return active_; }
    const std::vector<double>& psi() const { return psi_; }

private:
    ReconstructionProblem() = default;

    int width_ = 0;
    int height_ = 0;
    std::size_t bands_ = 0;
    std::vector<double> psi_;
    Mask active_;
    std::vector<double> gram_;   ///< bands^2 per pixel
    std::vector<double> rhs_;    ///< bands per pixel
    std::vector<double> energy_; ///< one per pixel
};

struct ReconReport {
    SpectralCube cube;
    std::vector<double> loss_history;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes the objective with monotone Adam from the configured initial guess.
ReconReport reconstruct(const ReconstructionProblem& problem, const WavelengthGrid& grid, const ReconConfig& config);

/// Full per-camera reconstruction from a scan stack and depth map.
ReconReport reconstruct_reflectance(const ScanStack& stack, const DepthMap& depth, const forward::GaussianField& field,
                                    const forward::RadiometricResponse& response, const ReconConfig& config);

/// Same, with Psi taken from illuminant and sensor models.
ReconReport reconstruct_reflectance(const ScanStack& stack, const DepthMap& depth, const forward::GaussianField& field,
                                    const forward::IlluminantModel& illum, const forward::SensorModel& sensor,
                                    const WavelengthGrid& grid, const ReconConfig& config);

}  // namespace bh3d::recon
