#include "pqproj/sampling.hpp"

#include <numeric>
#include <stdexcept>

namespace pqproj {

std::uint64_t UniformSource::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("UniformSource::below: empty range");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    for (;;) {
        const std::uint64_t r = engine_();
        if (r < limit) return r % n;
    }
}

std::vector<Vector> stratified_samples(const ChartDomain& domain, int n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("stratified_samples: sample count must be positive");
    const int m = domain.dimension();
    UniformSource rng(seed);
    std::vector<Vector> pts(static_cast<std::size_t>(n), Vector(m));
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int axis = 0; axis < m; ++axis) {
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        const double lo = domain.lo()[axis];
        const double width = domain.hi()[axis] - lo;
        for (int i = 0; i < n; ++i)
            pts[static_cast<std::size_t>(i)][axis] =
                lo + width * (perm[static_cast<std::size_t>(i)] + rng.next()) / static_cast<double>(n);
    }
    return pts;
}

std::vector<Vector> grid_path(const ChartDomain& domain, int per_axis) {
    if (per_axis <= 0) throw std::invalid_argument("grid_path: cells per axis must be positive");
    const int m = domain.dimension();
    std::size_t total = 1;
    for (int i = 0; i < m; ++i) total *= static_cast<std::size_t>(per_axis);

    std::vector<Vector> pts;
    pts.reserve(total);
    for (std::size_t count = 0; count < total; ++count) {
        std::size_t rem = count;
        std::vector<int> digit(static_cast<std::size_t>(m));
        for (int a = 0; a < m; ++a) {
            digit[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(per_axis));
            rem /= static_cast<std::size_t>(per_axis);
        }
        // Axis a runs backwards whenever the displayed indices of the slower
        // axes sum to an odd number, which keeps the walk continuous.
        Vector x(m);
        int slower_sum = 0;
        for (int a = m - 1; a >= 0; --a) {
            int d = digit[static_cast<std::size_t>(a)];
            if (slower_sum % 2 == 1) d = per_axis - 1 - d;
            slower_sum += d;
            x[a] = domain.lo()[a] + (domain.hi()[a] - domain.lo()[a]) * (d + 0.5) / per_axis;
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace pqproj
