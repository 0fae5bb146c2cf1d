#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "steersum/errors.hpp"

namespace steersum {

enum class ScheduleKind { Cosine, Sqrt, Linear };

inline std::string to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Cosine: return "cosine";
        case ScheduleKind::Sqrt: return "sqrt";
        case ScheduleKind::Linear: return "linear";
    }
    return "cosine";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "cosine") return ScheduleKind::Cosine;
    if (s == "sqrt") return ScheduleKind::Sqrt;
    if (s == "linear") return ScheduleKind::Linear;
    throw ConfigError("unknown schedule kind: " + s);
}

/// Cumulative noise-retention curve: alpha_bar[0] = 1 (clean data),
/// alpha_bar[T] ~ 0 (pure noise), non-increasing in between.
struct NoiseSchedule {
    std::vector<double> alpha_bar;  // length T+1, indexed 0..T

    int steps() const { return static_cast<int>(alpha_bar.size()) - 1; }

    double at(int t) const {
        if (t < 0 || t > steps()) throw ScheduleError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
        return alpha_bar[static_cast<std::size_t>(t)];
    }
};

inline NoiseSchedule make_schedule(int T, ScheduleKind kind = ScheduleKind::Cosine) {
    if (T < 1) throw ConfigError("schedule needs T >= 1");
    constexpr double kFloor = 1e-5;
    NoiseSchedule sched;
    sched.alpha_bar.resize(static_cast<std::size_t>(T) + 1);
    sched.alpha_bar[0] = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double u = static_cast<double>(t) / static_cast<double>(T);
        double a = 0.0;
        switch (kind) {
            case ScheduleKind::Cosine: {
                const double c = std::cos(u * M_PI / 2.0);
                a = c * c;
                break;
            }
            case ScheduleKind::Sqrt:
                a = 1.0 - std::sqrt(u + 1e-4);
                break;
            case ScheduleKind::Linear:
                a = 1.0 - u;
                break;
        }
        a = std::min(1.0, std::max(kFloor, a));
        // clipping can only flatten the curve, never invert it; enforce anyway
        sched.alpha_bar[static_cast<std::size_t>(t)] = std::min(a, sched.alpha_bar[static_cast<std::size_t>(t - 1)]);
    }
    return sched;
}

}  // namespace steersum
