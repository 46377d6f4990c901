#include "bh3d/core/adam.hpp"

#include <algorithm>
#include <cmath>

#include "bh3d/core/error.hpp"

namespace bh3d {

AdamResult MonotoneAdam::minimize(std::vector<double>& x, const Objective& objective, const Projection& project,
                                  const Observer& observe) const {
    const std::size_t n = x.size();
    const auto& o = options_;
    BH3D_REQUIRE(o.learning_rate > 0.0, ConfigError, "learning rate must be positive");

    if (project) project(x);
    std::vector<double> grad(n), trial(n), trial_grad(n), m(n, 0.0), v(n, 0.0), m_next(n), v_next(n);
    AdamResult result;
    double loss = objective(x, grad);
    if (!std::isfinite(loss)) throw NumericalError("objective is not finite at the initial point", 0, loss);
    result.loss_history.push_back(loss);

    double step = o.learning_rate;
    const double min_step = o.learning_rate * o.min_step_fraction;
    int accepted = 0;
    int t = 0;  // steps since the moments were last reset
    while (result.iterations < o.max_iterations) {
        ++t;
        const double c1 = 1.0 - std::pow(o.beta1, t);
        const double c2 = 1.0 - std::pow(o.beta2, t);
        for (std::size_t i = 0; i < n; ++i) {
            m_next[i] = o.beta1 * m[i] + (1.0 - o.beta1) * grad[i];
            v_next[i] = o.beta2 * v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
        }
        bool moved = false;
        int rejected = 0;
        while (result.iterations < o.max_iterations && step >= min_step) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = x[i] - step * (m_next[i] / c1) / (std::sqrt(v_next[i] / c2) + o.epsilon);
            }
            if (project) project(trial);
            ++result.iterations;
            const double trial_loss = objective(trial, trial_grad);
            if (std::isfinite(trial_loss) && trial_loss <= loss) {
                x.swap(trial);
                grad.swap(trial_grad);
                m.swap(m_next);
                v.swap(v_next);
                loss = trial_loss;
                step = std::min(o.learning_rate, step * o.grow);
                moved = true;
                break;
            }
            step *= o.shrink;
            // Stale momentum can point uphill; fall back to a fresh gradient direction.
            if (++rejected == o.restart_after && t > 1) break;
        }
        if (!moved) {
            if (t > 1 && result.iterations < o.max_iterations) {
                std::fill(m.begin(), m.end(), 0.0);
                std::fill(v.begin(), v.end(), 0.0);
                t = 0;
                step = o.learning_rate;
                continue;
            }
            // No descent even along the fresh gradient direction.
            result.converged = step < min_step;
            break;
        }
        ++accepted;
        result.loss_history.push_back(loss);
        if (observe && !observe(accepted, loss, x)) break;
        const auto& h = result.loss_history;
        if (static_cast<int>(h.size()) > o.patience) {
            const double before = h[h.size() - 1 - static_cast<std::size_t>(o.patience)];
            if (before - loss <= o.rel_tolerance * std::abs(loss) + o.abs_tolerance) {
                result.converged = true;
                break;
            }
        }
    }
    result.loss = loss;
    return result;
}

}  // namespace bh3d
