#pragma once

#include <functional>
#include <vector>

namespace bh3d {

struct AdamOptions {
    double learning_rate = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_iterations = 2000;
    /// Stop when the loss improves by less than rel_tolerance * loss over `patience` accepted steps.
    double rel_tolerance = 1e-6;
    /// Absolute improvement floor added to the relative test, for losses that approach zero.
    double abs_tolerance = 0.0;
    int patience = 20;
    /// Step-size multipliers applied after a rejected / accepted trial.
    double shrink = 0.5;
    double grow = 1.2;
    /// Give up on a direction once the step falls below this fraction of learning_rate.
    double min_step_fraction = 1e-10;
    /// Consecutive rejections after which the moment estimates are reset.
    int restart_after = 6;
};

struct AdamResult {
    double loss = 0.0;
    int iterations = 0;  ///< objective evaluations after the initial one
    bool converged = false;
    std::vector<double> loss_history;  ///< loss at every accepted iterate, starting with the initial point
};

/**
 * @brief Adam with a monotone safeguard.
 *
 * A trial step that would raise the loss is rejected and retried with half the
 * step; accepted steps let the step regrow toward the base rate. The recorded
 * loss sequence is therefore non-increasing.
 */
class MonotoneAdam {
public:
    /// objective(x, grad) returns the loss at x and writes its gradient.
    using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;
    /// Optional in-place projection applied to every trial point (e.g. clamping to x >= 0).
    using Projection = std::function<void(std::vector<double>& x)>;
    /// Called after each accepted step with (iteration, loss); returning false stops the run.
    using Observer = std::function<bool(int iteration, double loss, const std::vector<double>& x)>;

    explicit MonotoneAdam(AdamOptions options) : options_(options) {}

    AdamResult minimize(std::vector<double>& x, const Objective& objective, const Projection& project = {},
                        const Observer& observe = {}) const;

private:
    AdamOptions options_;
};

}  // namespace bh3d
