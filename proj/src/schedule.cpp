#include "autoedit/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace autoedit {

namespace {

void check_t(int t, const NoiseSchedule& sched, bool allow_zero) {
    if (t < (allow_zero ? 0 : 1) || t > sched.T)
        throw std::invalid_argument("timestep out of range");
}

void check_dims(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("vector dimension mismatch");
}

}  // namespace

NoiseSchedule make_linear_schedule(int T) {
    if (T < 1) throw std::invalid_argument("schedule needs T >= 1");
    NoiseSchedule s;
    s.T = T;
    s.alpha_bar.resize(T + 1);
    for (int t = 0; t <= T; ++t)
        s.alpha_bar[t] = 1.0 - static_cast<double>(t) / (T + 1);
    return s;
}

Vec forward_sample(const Vec& x0, int t, const Vec& eps, const NoiseSchedule& sched) {
    check_t(t, sched, true);
    check_dims(x0, eps);
    const double ab = sched.alpha_bar[t];
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Vec out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

Vec implied_x0(const Vec& x_t, int t, const Vec& eps, const NoiseSchedule& sched) {
    check_t(t, sched, false);
    check_dims(x_t, eps);
    const double ab = sched.alpha_bar[t];
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Vec out(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - b * eps[i]) / a;
    return out;
}

Vec ddim_step(const Vec& x_hat0, int t, const Vec& eps, const NoiseSchedule& sched) {
    check_t(t, sched, false);
    check_dims(x_hat0, eps);
    return forward_sample(x_hat0, t - 1, eps, sched);
}

}  // namespace autoedit
