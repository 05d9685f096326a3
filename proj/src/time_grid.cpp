#include "time_grid.hpp"

#include "errors.hpp"

#include <cmath>

namespace rbsde {

TimeGrid::TimeGrid(double horizon, std::size_t step_count) {
    require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::invalid_argument,
            "time grid: horizon must be positive and finite");
    require(step_count >= 1, ErrorCode::invalid_argument,
            "time grid: step count must be at least 1");
    times_.resize(step_count + 1);
    for (std::size_t i = 0; i <= step_count; ++i) {
        times_[i] = horizon * static_cast<double>(i) / static_cast<double>(step_count);
    }
    times_[step_count] = horizon;
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    require(times_.size() >= 2, ErrorCode::invalid_argument,
            "time grid: need at least two grid points");
    require(times_.front() == 0.0, ErrorCode::invalid_argument,
            "time grid: first point must be 0");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
        require(times_[i] < times_[i + 1], ErrorCode::invalid_argument,
                "time grid: times must be strictly increasing");
    }
    require(times_.back() > 0.0, ErrorCode::invalid_argument,
            "time grid: horizon must be positive");
}

std::size_t TimeGrid::nearest_index(double t) const {
    std::size_t best = 0;
    double gap = std::fabs(times_[0] - t);
    for (std::size_t i = 1; i < times_.size(); ++i) {
        double g = std::fabs(times_[i] - t);
        if (g < gap) {
            gap = g;
            best = i;
        }
    }
    return best;
}

} // namespace rbsde
