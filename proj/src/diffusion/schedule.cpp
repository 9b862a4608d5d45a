#include "mmccd/diffusion/schedule.hpp"

#include <stdexcept>

namespace mmccd::diffusion {

NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_end < 1.0))
        throw std::invalid_argument("schedule: beta bounds must lie in (0, 1)");
    if (beta_start > beta_end)
        throw std::invalid_argument("schedule: beta_start must not exceed beta_end");

    NoiseSchedule s;
    s.kind = ScheduleKind::linear;
    s.T = T;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.beta.assign(static_cast<size_t>(T) + 1, 0.0);
    s.alpha.assign(static_cast<size_t>(T) + 1, 1.0);
    s.alpha_bar.assign(static_cast<size_t>(T) + 1, 1.0);
    for (int t = 1; t <= T; ++t) {
        double frac = T > 1 ? static_cast<double>(t - 1) / (T - 1) : 0.0;
        s.beta[t] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[t] = 1.0 - s.beta[t];
        s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    }
    return s;
}

std::string schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::linear: return "linear";
    }
    throw std::invalid_argument("schedule: unknown kind");
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "linear") return ScheduleKind::linear;
    throw std::invalid_argument("schedule: unknown kind '" + name + "'");
}

}  // namespace mmccd::diffusion
