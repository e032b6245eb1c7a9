#pragma once

// Budgets and results shared by the exact solvers.

#include "octsvm/model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace octsvm {

struct Budget {
    double time_limit = 30.0;  // seconds, checked between nodes
    long node_limit = std::numeric_limits<long>::max();
    double gap_target = 1e-6;  // relative

    void validate() const {
        if (!(time_limit > 0.0) || node_limit <= 0 || !(gap_target > 0.0))
            throw std::invalid_argument("budget limits must be positive");
    }

    /// Node-limited, wall-clock free: reproducible runs.
    static Budget nodes(long limit, double gap = 1e-6) {
        Budget b;
        b.time_limit = std::numeric_limits<double>::infinity();
        b.node_limit = limit;
        b.gap_target = gap;
        return b;
    }
};

enum class SolveStatus { optimal, gap_limit, time_limit, infeasible };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::gap_limit: return "gap-limit";
        case SolveStatus::time_limit: return "time-limit";
        case SolveStatus::infeasible: return "infeasible";
    }
    return "?";
}

/// Relative gap (incumbent - bound) / max(1, |incumbent|).
inline double relative_gap(double incumbent, double bound) {
    if (!std::isfinite(incumbent)) return std::numeric_limits<double>::infinity();
    if (!std::isfinite(bound)) return std::numeric_limits<double>::infinity();
    return std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

struct LogLine {
    long nodes = 0;
    double bound = 0.0;
    double incumbent = 0.0;
    double gap = 0.0;
    double time = 0.0;
    std::size_t open = 0;
};

inline std::string format_log_line(const LogLine& l) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "nodes %8ld open %6zu bound %.8g incumbent %.8g gap %.3e time %.2fs", l.nodes, l.open,
                  l.bound, l.incumbent, l.gap, l.time);
    return buf;
}

struct SolveResult {
    std::optional<Solution> incumbent;
    double best_bound = -std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    SolveStatus status = SolveStatus::time_limit;
    long nodes_explored = 0;
    double wall_time = 0.0;
    std::vector<LogLine> trace;

    double objective() const {
        return incumbent ? incumbent->objective : std::numeric_limits<double>::infinity();
    }

    /// One machine-readable line: key=value pairs.
    std::string summary() const {
        char buf[256];
        std::snprintf(buf, sizeof buf, "status=%s objective=%.12g bound=%.12g gap=%.6e nodes=%ld time=%.3f",
                      to_string(status), objective(), best_bound, gap, nodes_explored, wall_time);
        return buf;
    }
};

}  // namespace octsvm
