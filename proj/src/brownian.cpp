#include "brownian.hpp"

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <cmath>

namespace rbsde {

BrownianEnsemble simulate_brownian(const TimeGrid& grid, std::size_t paths,
                                   std::size_t dim, std::uint64_t seed) {
    require(paths >= 1, ErrorCode::invalid_argument, "brownian: need at least one path");
    require(dim >= 1, ErrorCode::invalid_argument, "brownian: dimension must be >= 1");

    BrownianEnsemble ens{grid, seed, CellArray(paths, grid.steps(), dim)};
    const std::size_t steps = grid.steps();
    std::vector<double> sqrt_dt(steps);
    for (std::size_t i = 0; i < steps; ++i) sqrt_dt[i] = std::sqrt(grid.dt(i));

    const std::uint64_t stream = rng::derive_seed(seed, 0x62726f776eULL);
    double* out = ens.dw.data().data();
    parallel_for(paths, [&](std::size_t mb, std::size_t me) {
        for (std::size_t m = mb; m < me; ++m) {
            std::uint64_t base = (static_cast<std::uint64_t>(m) * steps) * dim;
            for (std::size_t i = 0; i < steps; ++i) {
                for (std::size_t k = 0; k < dim; ++k) {
                    std::uint64_t n = base + i * dim + k;
                    out[n] = rng::normal_at(stream, n) * sqrt_dt[i];
                }
            }
        }
    });
    return ens;
}

} // namespace rbsde
