#pragma once

#include "arrays.hpp"
#include "time_grid.hpp"

#include <cstdint>

namespace rbsde {

/// Seeded ensemble of d-dimensional Brownian increments on a time grid.
/// Every cell is a pure function of (seed, path, step, component), so the
/// ensemble is reproducible bit-for-bit regardless of how the fill loop
/// is scheduled.
struct BrownianEnsemble {
    TimeGrid grid;
    std::uint64_t seed = 0;
    CellArray dw; // increments, variance dt per component

    std::size_t paths() const { return dw.paths(); }
    std::size_t dim() const { return dw.dim(); }
};

BrownianEnsemble simulate_brownian(const TimeGrid& grid, std::size_t paths,
                                   std::size_t dim, std::uint64_t seed);

} // namespace rbsde
