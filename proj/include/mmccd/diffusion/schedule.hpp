#pragma once

#include <string>
#include <vector>

namespace mmccd::diffusion {

enum class ScheduleKind { linear };

// Variance schedule arrays are 1-indexed by timestep; index 0 carries the
// convention values alpha[0] = alpha_bar[0] = 1 (no accumulated noise).
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::linear;
    int T = 0;
    double beta_start = 0.0, beta_end = 0.0;
    std::vector<double> beta;       // beta[0] = 0, unused
    std::vector<double> alpha;      // alpha[t] = 1 - beta[t]
    std::vector<double> alpha_bar;  // running product of alpha
};

// Linear interpolation from beta_start to beta_end over t = 1..T.
NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end);

std::string schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& name);

}  // namespace mmccd::diffusion
