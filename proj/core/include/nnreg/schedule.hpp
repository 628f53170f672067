// Importance-weight schedules: epoch-dependent coefficients balancing the
// supervised task against the two reconstruction tasks.
#pragma once

#include <string>

namespace nnreg {

enum class ScheduleKind { Stairs, Linear, AbridgedLinear, Exponential };

ScheduleKind schedule_kind_from_name(const std::string& name);
const char* schedule_kind_name(ScheduleKind k);

struct LambdaTriple {
    double sup = 0.0;
    double in = 0.0;
    double out = 0.0;
};

// Trajectories lambda_sup(t) / lambda_in(t) / lambda_out(t):
//   Stairs(t1):          secondaries only before t1, supervised only after.
//   Linear(t1):          linear start -> end over the whole horizon [0, t1].
//   AbridgedLinear(t1):  linear over [0, t1], clamped at the end values after.
//   Exponential(sigma):  secondaries exp(-t/sigma), supervised 1 - exp(-t/sigma).
// Start/end values apply to the first three kinds; validation enforces
// lambda_sup non-decreasing and the secondaries non-increasing, all in [0,1].
// Stairs and Exponential keep the two-task constraint sup + secondary = 1.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::AbridgedLinear;
    double t1 = 1.0;    // saturation epoch (Stairs/AbridgedLinear) or horizon (Linear)
    double sigma = 1.0; // Exponential time constant
    double sup_start = 0.0, sup_end = 1.0;
    double in_start = 1.0, in_end = 0.0;
    double out_start = 1.0, out_end = 0.0;
};

// Throws ConfigError if the spec violates the invariants above.
void validate_schedule(const ScheduleSpec& spec);

LambdaTriple schedule_eval(const ScheduleSpec& spec, double t);

} // namespace nnreg
