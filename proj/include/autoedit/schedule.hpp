#pragma once

#include "autoedit/linalg.hpp"

namespace autoedit {

// Cumulative noise-retention sequence for the deterministic denoising core.
// alpha_bar[0] == 1 exactly, strictly decreasing, alpha_bar[T] > 0.
struct NoiseSchedule {
    int T = 0;
    Vec alpha_bar;  // indices 0..T
};

// alpha_bar_t = 1 - t / (T + 1); keeps alpha_bar[T] = 1/(T+1) away from zero
// so the implied-x0 division stays defined.
NoiseSchedule make_linear_schedule(int T);

// Noisy latent paired with its timestep index (0..T).
struct LatentState {
    Vec x;
    int t = 0;
};

// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps
Vec forward_sample(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& sched);

// (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t); t >= 1
Vec implied_x0(const Vec& x_t, int t, const Vec& eps, const NoiseSchedule& sched);

// x_{t-1} = sqrt(ab_{t-1}) x0_hat + sqrt(1 - ab_{t-1}) eps; t >= 1
Vec ddim_step(const Vec& x_hat0, int t, const Vec& eps, const NoiseSchedule& sched);

}  // namespace autoedit
