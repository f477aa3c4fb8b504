#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pqproj/geometry.hpp"

namespace pqproj {

/// Seeded source of uniform doubles whose output is identical on every
/// platform (the standard distributions are implementation-defined).
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in the open interval (0, 1).
    double next() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    double next(double lo, double hi) { return lo + (hi - lo) * next(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/// Latin-hypercube points in the box: every axis is cut into n strata and
/// each stratum holds exactly one point.
std::vector<Vector> stratified_samples(const ChartDomain& domain, int n, std::uint64_t seed);

/// Cell centres of a regular grid with `per_axis` cells per side, ordered as
/// a boustrophedon path so that consecutive points are grid neighbours.
std::vector<Vector> grid_path(const ChartDomain& domain, int per_axis);

}  // namespace pqproj
