#include "nnreg/schedule.hpp"

#include <cmath>

#include "nnreg/errors.hpp"

namespace nnreg {

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "stairs") return ScheduleKind::Stairs;
    if (name == "linear") return ScheduleKind::Linear;
    if (name == "abridged_linear") return ScheduleKind::AbridgedLinear;
    if (name == "exponential") return ScheduleKind::Exponential;
    throw ConfigError("unknown schedule kind: " + name);
}

const char* schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Stairs: return "stairs";
        case ScheduleKind::Linear: return "linear";
        case ScheduleKind::AbridgedLinear: return "abridged_linear";
        case ScheduleKind::Exponential: return "exponential";
    }
    return "?";
}

namespace {

void require_unit_range(double v, const char* name) {
    if (v < 0.0 || v > 1.0) throw ConfigError(std::string("schedule: ") + name + " must be in [0,1]");
}

} // namespace

void validate_schedule(const ScheduleSpec& spec) {
    if (spec.kind == ScheduleKind::Exponential) {
        if (!(spec.sigma > 0.0)) throw ConfigError("schedule: exponential sigma must be > 0");
        return; // endpoints are structural: (1-e, e, e)
    }
    if (!(spec.t1 > 0.0)) throw ConfigError("schedule: t1 must be > 0");
    require_unit_range(spec.sup_start, "sup_start");
    require_unit_range(spec.sup_end, "sup_end");
    require_unit_range(spec.in_start, "in_start");
    require_unit_range(spec.in_end, "in_end");
    require_unit_range(spec.out_start, "out_start");
    require_unit_range(spec.out_end, "out_end");
    if (spec.sup_end < spec.sup_start) throw ConfigError("schedule: lambda_sup must be non-decreasing");
    if (spec.in_end > spec.in_start) throw ConfigError("schedule: lambda_in must be non-increasing");
    if (spec.out_end > spec.out_start) throw ConfigError("schedule: lambda_out must be non-increasing");
    if (spec.kind == ScheduleKind::Stairs) {
        // two-task pre-training form: supervised and secondary weights are complementary
        if (spec.sup_start + spec.in_start != 1.0 || spec.sup_end + spec.in_end != 1.0 ||
            spec.sup_start + spec.out_start != 1.0 || spec.sup_end + spec.out_end != 1.0) {
            throw ConfigError("schedule: stairs requires sup + secondary == 1 at both endpoints");
        }
    }
}

LambdaTriple schedule_eval(const ScheduleSpec& spec, double t) {
    if (t < 0.0) throw ConfigError("schedule_eval: epoch must be >= 0");
    validate_schedule(spec);
    switch (spec.kind) {
        case ScheduleKind::Stairs:
            if (t < spec.t1) return {spec.sup_start, spec.in_start, spec.out_start};
            return {spec.sup_end, spec.in_end, spec.out_end};
        case ScheduleKind::Linear:
        case ScheduleKind::AbridgedLinear: {
            const double frac = t >= spec.t1 ? 1.0 : t / spec.t1;
            return {spec.sup_start + (spec.sup_end - spec.sup_start) * frac,
                    spec.in_start + (spec.in_end - spec.in_start) * frac,
                    spec.out_start + (spec.out_end - spec.out_start) * frac};
        }
        case ScheduleKind::Exponential: {
            const double secondary = std::exp(-t / spec.sigma);
            return {1.0 - secondary, secondary, secondary};
        }
    }
    return {};
}

} // namespace nnreg
