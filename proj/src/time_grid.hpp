#pragma once

#include <cstddef>
#include <vector>

namespace rbsde {

/// Discretization of [0, T]: t_0 = 0 < t_1 < ... < t_N = T, uniform by
/// default. Non-uniform grids are accepted as long as they are strictly
/// increasing and pinned at 0 and T.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t step_count);
    explicit TimeGrid(std::vector<double> times);

    double horizon() const { return times_.back(); }
    std::size_t steps() const { return times_.size() - 1; }
    double time(std::size_t i) const { return times_[i]; }
    double dt(std::size_t i) const { return times_[i + 1] - times_[i]; }
    const std::vector<double>& times() const { return times_; }

    /// Grid index whose time is closest to t (used for checkpoints).
    std::size_t nearest_index(double t) const;

private:
    std::vector<double> times_;
};

inline TimeGrid make_time_grid(double horizon, std::size_t step_count) {
    return TimeGrid(horizon, step_count);
}

} // namespace rbsde
